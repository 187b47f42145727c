use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use super::params::{GlobalParams, ProbeEffects};
use super::track::ProbeTrack;
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[inline]
pub fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let z = x - mean;
    -0.5 * (LN_2PI + var.ln()) - z * z / (2.0 * var)
}

/// Inverse-gamma log density with shape `a` and scale `b`.
pub fn inv_gamma_logpdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    a * b.ln() - ln_gamma(a) - (a + 1.0) * x.ln() - b / x
}

pub fn beta_logpdf(x: f64, a: f64, b: f64) -> f64 {
    if !(x > 0.0 && x < 1.0) {
        return f64::NEG_INFINITY;
    }
    (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)
}

/// Gamma log density with shape `a` and rate `b`.
pub fn gamma_logpdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    a * b.ln() - ln_gamma(a) + (a - 1.0) * x.ln() - b * x
}

/// `sum_j log N(x_j; mean, var)`.
#[inline]
pub(crate) fn normal_logpdf_sum(xs: &[f64], mean: f64, var: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    -0.5 * xs.len() as f64 * (LN_2PI + var.ln()) - ss / (2.0 * var)
}

/// Log densities of probe `i` under hybridization states 0 and 1. The
/// control factor is shared by both.
#[inline]
pub(crate) fn emission_pair(track: &ProbeTrack, i: usize, mu_i: f64, delta_i: f64, params: &GlobalParams) -> (f64, f64) {
    let control = normal_logpdf_sum(track.control_row(i), mu_i, params.sigma2);
    let y = track.treatment_row(i);
    let h0 = normal_logpdf_sum(y, mu_i, params.sigma2);
    let h1 = normal_logpdf_sum(y, mu_i + delta_i, params.tau2);
    (control + h0, control + h1)
}

/// Joint log density of the treatment and control intensities of probe `i`
/// given hybridization state `h`. `effects = None` selects the pooled model.
pub fn emission_logdensity(
    track: &ProbeTrack,
    i: usize,
    h: u8,
    effects: Option<&ProbeEffects>,
    params: &GlobalParams,
) -> Result<f64> {
    if i >= track.len() {
        return Err(Error::Shape(format!("probe index {i} out of range for {} probes", track.len())));
    }
    let (mu_i, delta_i) = ProbeEffects::probe_means(effects, params, i);
    let (l0, l1) = emission_pair(track, i, mu_i, delta_i, params);
    let v = if h == 0 { l0 } else { l1 };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical { probe: i, context: Some("emission density".into()) })
    }
}

/// Log density of the random effects under `mu_i ~ N(mu, eta2)` and
/// `delta_i ~ N(delta, xi2)`.
pub fn effects_logdensity(effects: Option<&ProbeEffects>, params: &GlobalParams) -> Result<f64> {
    let effects = effects.ok_or(Error::Mode)?;
    let n = effects.len() as f64;
    let ss_mu: f64 = effects.mu_i.iter().map(|m| (m - params.mu) * (m - params.mu)).sum();
    let ss_delta: f64 = effects.delta_i.iter().map(|d| (d - params.delta) * (d - params.delta)).sum();
    Ok(-0.5 * n * (LN_2PI + params.eta2.ln()) - ss_mu / (2.0 * params.eta2) - 0.5 * n * (LN_2PI + params.xi2.ln())
        - ss_delta / (2.0 * params.xi2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params() -> GlobalParams {
        GlobalParams {
            mu: -0.111,
            delta: 2.25,
            sigma2: 0.41,
            tau2: 0.41,
            eta2: 0.2,
            xi2: 0.3,
            p0: 0.051,
            p1: 0.942,
            pi1: 0.002,
            lambda: 1.0 / 347.2,
        }
    }

    // Scalar pdf evaluated in linear space, then logged.
    fn logpdf_oracle(x: f64, m: f64, v: f64) -> f64 {
        ((-(x - m).powi(2) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt()).ln()
    }

    #[test]
    fn unit_height_gaussian_at_mode() {
        let t = ProbeTrack::new("c", vec![0], 1, vec![0.7], 0, vec![]).unwrap();
        let p = GlobalParams { mu: 0.7, sigma2: 1.0 / (2.0 * PI), ..params() };
        let v = emission_logdensity(&t, 0, 0, None, &p).unwrap();
        assert!(v.abs() < 1e-14, "{v}");
    }

    #[test]
    fn symmetric_about_mean_when_unhybridized() {
        let p = params();
        let a = 0.37;
        let up = ProbeTrack::new("c", vec![0], 1, vec![p.mu + a], 0, vec![]).unwrap();
        let down = ProbeTrack::new("c", vec![0], 1, vec![p.mu - a], 0, vec![]).unwrap();
        let lu = emission_logdensity(&up, 0, 0, None, &p).unwrap();
        let ld = emission_logdensity(&down, 0, 0, None, &p).unwrap();
        assert!((lu - ld).abs() < 1e-15);
    }

    #[test]
    fn hybridized_matches_scalar_oracle() {
        let p = params();
        let t = ProbeTrack::new("c", vec![0], 1, vec![2.139], 0, vec![]).unwrap();
        let v = emission_logdensity(&t, 0, 1, None, &p).unwrap();
        let expected = logpdf_oracle(2.139, -0.111 + 2.25, 0.41);
        assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
    }

    #[test]
    fn control_factor_does_not_depend_on_state() {
        let p = GlobalParams { tau2: 0.9, ..params() };
        let t = ProbeTrack::new("c", vec![0], 2, vec![1.0, 1.5], 2, vec![0.1, -0.2]).unwrap();
        let effects = ProbeEffects { mu_i: vec![0.05], delta_i: vec![1.2] };
        let l0 = emission_logdensity(&t, 0, 0, Some(&effects), &p).unwrap();
        let l1 = emission_logdensity(&t, 0, 1, Some(&effects), &p).unwrap();
        let ctrl = logpdf_oracle(0.1, 0.05, p.sigma2) + logpdf_oracle(-0.2, 0.05, p.sigma2);
        let e0 = ctrl + logpdf_oracle(1.0, 0.05, p.sigma2) + logpdf_oracle(1.5, 0.05, p.sigma2);
        let e1 = ctrl + logpdf_oracle(1.0, 1.25, 0.9) + logpdf_oracle(1.5, 1.25, 0.9);
        assert!((l0 - e0).abs() < 1e-12);
        assert!((l1 - e1).abs() < 1e-12);
    }

    #[test]
    fn effects_at_prior_mean_give_modal_density() {
        let p = params();
        let n = 7;
        let e = ProbeEffects::at_global(n, &p);
        let v = effects_logdensity(Some(&e), &p).unwrap();
        let expected = n as f64 * (normal_logpdf(0.0, 0.0, p.eta2) + normal_logpdf(0.0, 0.0, p.xi2));
        assert!((v - expected).abs() < 1e-12);
        assert!(matches!(effects_logdensity(None, &p), Err(Error::Mode)));
    }

    #[test]
    fn effects_density_matches_oracle() {
        let p = params();
        let e = ProbeEffects { mu_i: vec![0.3, -0.5, 0.01], delta_i: vec![2.0, 4.1, -1.0] };
        let v = effects_logdensity(Some(&e), &p).unwrap();
        let oracle: f64 = e.mu_i.iter().map(|&m| logpdf_oracle(m, p.mu, p.eta2)).sum::<f64>()
            + e.delta_i.iter().map(|&d| logpdf_oracle(d, p.delta, p.xi2)).sum::<f64>();
        assert!((v - oracle).abs() < 1e-10);
    }

    #[test]
    fn prior_densities_integrate_to_one() {
        // Midpoint rule over a wide support.
        let integrate = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, n: usize| {
            let h = (hi - lo) / n as f64;
            (0..n).map(|k| f(lo + (k as f64 + 0.5) * h).exp() * h).sum::<f64>()
        };
        let ig = integrate(&|x| inv_gamma_logpdf(x, 3.0, 2.0), 0.0, 200.0, 400_000);
        let be = integrate(&|x| beta_logpdf(x, 2.5, 4.0), 0.0, 1.0, 100_000);
        let ga = integrate(&|x| gamma_logpdf(x, 2.0, 35.0), 0.0, 5.0, 100_000);
        assert!((ig - 1.0).abs() < 1e-3, "{ig}");
        assert!((be - 1.0).abs() < 1e-6, "{be}");
        assert!((ga - 1.0).abs() < 1e-6, "{ga}");
    }
}
