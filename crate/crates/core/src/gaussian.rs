//! Conjugate algebra for the Gaussian layer shared by the ECM and Gibbs
//! updates.
//!
//! Given hybridization weights (posterior probabilities for ECM, sampled
//! indicators for Gibbs) and the variances, the log posterior is quadratic
//! in all means jointly: the globals `(mu, delta)` and every probe's
//! `(mu_i, delta_i)`. Integrating the probe effects out leaves a 2x2
//! Gaussian in `(mu, delta)`; given those, each probe's effects are an
//! independent 2x2 Gaussian.

use crate::model::{GlobalParams, Hyperpriors, Matrix2, Mode, ProbeEffects, ProbeTrack};

/// Per-probe quadratic coefficients. Observations informing `mu_i` alone
/// contribute precision `a0` and linear term `b0`; observations of
/// `mu_i + delta_i` contribute `a1`, `b1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ProbeStats {
    pub a0: f64,
    pub b0: f64,
    pub a1: f64,
    pub b1: f64,
}

pub(crate) fn probe_stats(track: &ProbeTrack, weights: &[f64], sigma2: f64, tau2: f64) -> Vec<ProbeStats> {
    let n_t = track.n_treatment() as f64;
    let n_c = track.n_control() as f64;
    (0..track.len())
        .map(|i| {
            let w = weights[i];
            let sx: f64 = track.control_row(i).iter().sum();
            let sy: f64 = track.treatment_row(i).iter().sum();
            ProbeStats {
                a0: (n_c + n_t * (1.0 - w)) / sigma2,
                b0: (sx + (1.0 - w) * sy) / sigma2,
                a1: n_t * w / tau2,
                b1: w * sy / tau2,
            }
        })
        .collect()
}

/// Stats with every data contribution removed, for prior-only runs.
pub(crate) fn empty_stats(n: usize) -> Vec<ProbeStats> {
    vec![ProbeStats { a0: 0.0, b0: 0.0, a1: 0.0, b1: 0.0 }; n]
}

/// A Gaussian in natural form: `precision * mean = linear`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Gaussian2 {
    pub precision: Matrix2,
    pub linear: [f64; 2],
}

impl Gaussian2 {
    pub fn mean(&self) -> [f64; 2] {
        solve2(&self.precision, &self.linear)
    }

    pub fn covariance(&self) -> Matrix2 {
        inv2(&self.precision)
    }
}

pub(crate) fn inv2(m: &Matrix2) -> Matrix2 {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
}

pub(crate) fn solve2(m: &Matrix2, b: &[f64; 2]) -> [f64; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [(m[1][1] * b[0] - m[0][1] * b[1]) / det, (m[0][0] * b[1] - m[1][0] * b[0]) / det]
}

/// Conditional of `(mu_i, delta_i)` given the globals.
#[inline]
pub(crate) fn effect_conditional(s: &ProbeStats, mu: f64, delta: f64, eta2: f64, xi2: f64) -> Gaussian2 {
    Gaussian2 {
        precision: [[s.a0 + s.a1 + 1.0 / eta2, s.a1], [s.a1, s.a1 + 1.0 / xi2]],
        linear: [s.b0 + s.b1 + mu / eta2, s.b1 + delta / xi2],
    }
}

/// Conditional of `(mu, delta)` given the variances, with the probe
/// effects integrated out (hierarchical) or absent (pooled).
pub(crate) fn global_means_conditional(
    stats: &[Vec<ProbeStats>],
    params: &GlobalParams,
    hyper: &Hyperpriors,
    mode: Mode,
) -> Gaussian2 {
    let mut precision = [[1.0 / hyper.mu_prior.var, 0.0], [0.0, 1.0 / hyper.delta_prior.var]];
    let mut linear = [hyper.mu_prior.mean / hyper.mu_prior.var, hyper.delta_prior.mean / hyper.delta_prior.var];
    match mode {
        Mode::Pooled => {
            for s in stats.iter().flatten() {
                precision[0][0] += s.a0 + s.a1;
                precision[0][1] += s.a1;
                precision[1][0] += s.a1;
                precision[1][1] += s.a1;
                linear[0] += s.b0 + s.b1;
                linear[1] += s.b1;
            }
        }
        Mode::Hierarchical => {
            let pe = 1.0 / params.eta2;
            let px = 1.0 / params.xi2;
            for s in stats.iter().flatten() {
                // P - P M^-1 P and P M^-1 c with P = diag(pe, px).
                let m = effect_conditional(s, 0.0, 0.0, params.eta2, params.xi2).precision;
                let mi = inv2(&m);
                precision[0][0] += pe - pe * pe * mi[0][0];
                precision[0][1] -= pe * px * mi[0][1];
                precision[1][0] -= px * pe * mi[1][0];
                precision[1][1] += px - px * px * mi[1][1];
                let c = [s.b0 + s.b1, s.b1];
                let mc = [mi[0][0] * c[0] + mi[0][1] * c[1], mi[1][0] * c[0] + mi[1][1] * c[1]];
                linear[0] += pe * mc[0];
                linear[1] += px * mc[1];
            }
        }
    }
    Gaussian2 { precision, linear }
}

/// Conditional of `mu` (precision, linear term) with every `delta_i`
/// (hierarchical) or `delta` (pooled) held fixed and `mu_i` integrated out.
pub(crate) fn global_mu_conditional_fixed_delta(
    stats: &[Vec<ProbeStats>],
    effects: Option<&[ProbeEffects]>,
    params: &GlobalParams,
    hyper: &Hyperpriors,
) -> (f64, f64) {
    let mut precision = 1.0 / hyper.mu_prior.var;
    let mut linear = hyper.mu_prior.mean / hyper.mu_prior.var;
    for (c, st) in stats.iter().enumerate() {
        for (i, s) in st.iter().enumerate() {
            match effects {
                None => {
                    precision += s.a0 + s.a1;
                    linear += s.b0 + s.b1 - s.a1 * params.delta;
                }
                Some(eff) => {
                    let pe = 1.0 / params.eta2;
                    let m = s.a0 + s.a1 + pe;
                    let c_i = s.b0 + s.b1 - s.a1 * eff[c].delta_i[i];
                    precision += pe - pe * pe / m;
                    linear += pe * c_i / m;
                }
            }
        }
    }
    (precision, linear)
}

/// Conditional of `mu_i` (precision, linear term) with `delta_i` fixed.
#[inline]
pub(crate) fn mu_i_conditional_fixed_delta(s: &ProbeStats, mu: f64, delta_i: f64, eta2: f64) -> (f64, f64) {
    (s.a0 + s.a1 + 1.0 / eta2, s.b0 + s.b1 - s.a1 * delta_i + mu / eta2)
}

/// Weighted residual sums behind the variance updates.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct ResidualStats {
    /// Squared residuals and observation count of the background component.
    pub ss0: f64,
    pub n0: f64,
    /// Same for the hybridized component.
    pub ss1: f64,
    pub n1: f64,
    /// Spread of the probe effects about the globals.
    pub ss_mu: f64,
    pub ss_delta: f64,
    pub n_probes: f64,
}

pub(crate) fn residual_stats(
    tracks: &[ProbeTrack],
    weights: &[Vec<f64>],
    effects: Option<&[ProbeEffects]>,
    params: &GlobalParams,
) -> ResidualStats {
    let mut r = ResidualStats::default();
    for (c, track) in tracks.iter().enumerate() {
        let n_t = track.n_treatment() as f64;
        let n_c = track.n_control() as f64;
        for i in 0..track.len() {
            let w = weights[c][i];
            let (mu_i, delta_i) = ProbeEffects::probe_means(effects.map(|e| &e[c]), params, i);
            let ssx: f64 = track.control_row(i).iter().map(|x| (x - mu_i) * (x - mu_i)).sum();
            let y = track.treatment_row(i);
            let ssy0: f64 = y.iter().map(|v| (v - mu_i) * (v - mu_i)).sum();
            let ssy1: f64 = y.iter().map(|v| (v - mu_i - delta_i) * (v - mu_i - delta_i)).sum();
            r.ss0 += ssx + (1.0 - w) * ssy0;
            r.n0 += n_c + n_t * (1.0 - w);
            r.ss1 += w * ssy1;
            r.n1 += w * n_t;
            r.ss_mu += (mu_i - params.mu) * (mu_i - params.mu);
            r.ss_delta += (delta_i - params.delta) * (delta_i - params.delta);
            r.n_probes += 1.0;
        }
    }
    r
}

/// Expected complete-data log density of the Gaussian layer under
/// hybridization weights, plus effect densities and Gaussian-layer priors.
/// This is the part of the ECM objective the Gaussian updates maximize.
#[cfg(test)]
pub(crate) fn gaussian_objective(
    tracks: &[ProbeTrack],
    weights: &[Vec<f64>],
    effects: Option<&[ProbeEffects]>,
    params: &GlobalParams,
    hyper: &Hyperpriors,
    mode: Mode,
) -> f64 {
    let mut q = hyper.log_prior_gaussian(params, mode);
    for (c, track) in tracks.iter().enumerate() {
        let eff = effects.map(|e| &e[c]);
        for i in 0..track.len() {
            let w = weights[c][i];
            let (mu_i, delta_i) = ProbeEffects::probe_means(eff, params, i);
            let y = track.treatment_row(i);
            q += crate::model::normal_logpdf_sum(track.control_row(i), mu_i, params.sigma2)
                + (1.0 - w) * crate::model::normal_logpdf_sum(y, mu_i, params.sigma2)
                + w * crate::model::normal_logpdf_sum(y, mu_i + delta_i, params.tau2);
        }
        if let Some(e) = eff {
            q += crate::model::effects_logdensity(Some(e), params).unwrap_or(f64::NEG_INFINITY);
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_and_inverse_agree() {
        let m = [[4.0, 1.0], [1.0, 3.0]];
        let x = solve2(&m, &[1.0, 2.0]);
        let i = inv2(&m);
        assert!((x[0] - (i[0][0] + 2.0 * i[0][1])).abs() < 1e-15);
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-14);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-14);
    }
}
