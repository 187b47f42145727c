//! Expectation/conditional-maximization fitting of the posterior mode.
//!
//! Each iteration runs exact forward-backward on every chromosome, then
//! maximizes the expected complete-data log posterior in three blocks:
//! the Bernoulli hybridization rates, the region process `(pi1, lambda)`,
//! and the Gaussian layer (all means jointly, then the variances).

mod transition;

pub use transition::{
    transition_objective, transition_value, update_transition, ObjectiveEval, TransitionStats, TransitionUpdate,
};

use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{
    effect_conditional, global_means_conditional, global_mu_conditional_fixed_delta, mu_i_conditional_fixed_delta,
    probe_stats, residual_stats, ProbeStats,
};
use crate::inference::{collapse_emissions, forward_backward, PosteriorTrack};
use crate::model::{effects_logdensity, GlobalParams, Hyperpriors, InvGammaPrior, Mode, ModelVariant, ProbeEffects, ProbeTrack};
use crate::regions::ProbabilityTrack;

/// Lower bound applied to every variance update.
pub const VARIANCE_FLOOR: f64 = 1e-8;
const PROB_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct EcmOptions {
    /// Convergence threshold on the change in the penalized log posterior.
    pub tol: f64,
    pub max_iter: usize,
    /// Starting point; `None` uses data-driven defaults.
    pub init: Option<GlobalParams>,
    /// Hold `(p0, p1)` at these values instead of estimating them.
    pub fixed_bernoulli: Option<(f64, f64)>,
}

impl Default for EcmOptions {
    fn default() -> Self {
        Self { tol: 1e-3, max_iter: 500, init: None, fixed_bernoulli: None }
    }
}

/// Posterior summaries from one E-step.
#[derive(Debug, Clone)]
pub struct EStepStats {
    pub posteriors: Vec<PosteriorTrack>,
    /// Expected number of probes in each region state.
    pub n: [f64; 2],
    /// Expected number of hybridized probes in each region state.
    pub m: [f64; 2],
    pub transitions: TransitionStats,
    /// `P(H_i = 1 | data)` per chromosome.
    pub hyb_weights: Vec<Vec<f64>>,
    pub loglik: f64,
}

pub fn e_step(tracks: &[ProbeTrack], effects: Option<&[ProbeEffects]>, params: &GlobalParams) -> Result<EStepStats> {
    let posteriors: Vec<PosteriorTrack> = tracks
        .par_iter()
        .enumerate()
        .map(|(c, track)| {
            let em = collapse_emissions(track, effects.map(|e| &e[c]), params)
                .map_err(|e| e.in_chromosome(&track.chromosome_id))?;
            forward_backward(&em, track.distances(), params).map_err(|e| e.in_chromosome(&track.chromosome_id))
        })
        .collect::<Result<_>>()?;

    let mut n = [0.0; 2];
    let mut m = [0.0; 2];
    let mut loglik = 0.0;
    let mut hyb_weights = Vec::with_capacity(tracks.len());
    for post in &posteriors {
        for (g, j) in post.gamma.iter().zip(&post.joint_he) {
            n[0] += g[0];
            n[1] += g[1];
            m[0] += j[1][0];
            m[1] += j[1][1];
        }
        loglik += post.loglik;
        hyb_weights.push((0..post.len()).map(|i| post.hyb_prob(i)).collect());
    }
    let transitions = TransitionStats::from_posteriors(posteriors.iter().zip(tracks.iter().map(|t| t.distances())));
    Ok(EStepStats { posteriors, n, m, transitions, hyb_weights, loglik })
}

/// Posterior-mode update of `(p0, p1)`. A rate with no expected probes in
/// its region state is held at `current`.
pub fn update_bernoulli(stats: &EStepStats, hyper: &Hyperpriors, current: (f64, f64)) -> (f64, f64) {
    let priors = [hyper.p0_prior, hyper.p1_prior];
    let prev = [current.0, current.1];
    let mut out = prev;
    for e in 0..2 {
        let denom = stats.n[e] + priors[e].a + priors[e].b - 2.0;
        if stats.n[e] > 0.0 && denom > 0.0 {
            out[e] = ((stats.m[e] + priors[e].a - 1.0) / denom).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        }
    }
    (out[0], out[1])
}

/// Result of the Gaussian-layer block.
#[derive(Debug, Clone)]
pub struct GaussianUpdate {
    pub params: GlobalParams,
    pub effects: Option<Vec<ProbeEffects>>,
    /// Variance updates that hit [`VARIANCE_FLOOR`].
    pub floor_hits: usize,
    /// Fewer than one expected hybridized observation: `delta`, `delta_i`,
    /// `tau2` and `xi2` were held.
    pub degenerate: bool,
}

fn inv_gamma_mode(prior: &InvGammaPrior, ss: f64, n: f64, hits: &mut usize) -> f64 {
    let v = (prior.scale + 0.5 * ss) / (prior.shape + 1.0 + 0.5 * n);
    if v < VARIANCE_FLOOR {
        *hits += 1;
        VARIANCE_FLOOR
    } else {
        v
    }
}

/// Maximize the Gaussian part of the expected log posterior given
/// hybridization weights: all means jointly in closed form, then each
/// variance given the new means.
pub fn update_gaussians_and_effects(
    tracks: &[ProbeTrack],
    hyb_weights: &[Vec<f64>],
    effects: Option<&[ProbeEffects]>,
    params: &GlobalParams,
    hyper: &Hyperpriors,
    mode: Mode,
) -> Result<GaussianUpdate> {
    if mode == Mode::Hierarchical && effects.is_none() {
        return Err(Error::Mode);
    }
    let stats: Vec<Vec<ProbeStats>> = tracks
        .par_iter()
        .zip(hyb_weights)
        .map(|(t, w)| probe_stats(t, w, params.sigma2, params.tau2))
        .collect();
    let n1: f64 = tracks
        .iter()
        .zip(hyb_weights)
        .map(|(t, w)| t.n_treatment() as f64 * w.iter().sum::<f64>())
        .sum();
    let degenerate = n1 < 1.0;
    let mut p = *params;
    let hierarchical = mode == Mode::Hierarchical;

    let new_effects: Option<Vec<ProbeEffects>> = if !degenerate {
        let g = global_means_conditional(&stats, params, hyper, mode).mean();
        p.mu = g[0];
        p.delta = g[1];
        hierarchical.then(|| {
            stats
                .iter()
                .map(|st| {
                    let (mu_i, delta_i) = st
                        .iter()
                        .map(|s| {
                            let m = effect_conditional(s, p.mu, p.delta, p.eta2, p.xi2).mean();
                            (m[0], m[1])
                        })
                        .unzip();
                    ProbeEffects { mu_i, delta_i }
                })
                .collect()
        })
    } else {
        warn!("fewer than one expected hybridized observation ({n1:.3}); holding delta, tau2 and xi2");
        let (prec, lin) = global_mu_conditional_fixed_delta(&stats, effects, params, hyper);
        p.mu = lin / prec;
        effects.map(|eff| {
            stats
                .iter()
                .zip(eff)
                .map(|(st, e)| {
                    let mu_i = st
                        .iter()
                        .zip(&e.delta_i)
                        .map(|(s, &d)| {
                            let (a, b) = mu_i_conditional_fixed_delta(s, p.mu, d, p.eta2);
                            b / a
                        })
                        .collect();
                    ProbeEffects { mu_i, delta_i: e.delta_i.clone() }
                })
                .collect()
        })
    };

    let r = residual_stats(tracks, hyb_weights, new_effects.as_deref(), &p);
    let mut floor_hits = 0;
    p.sigma2 = inv_gamma_mode(&hyper.sigma2_prior, r.ss0, r.n0, &mut floor_hits);
    if !degenerate {
        p.tau2 = inv_gamma_mode(&hyper.tau2_prior, r.ss1, r.n1, &mut floor_hits);
    }
    if hierarchical {
        p.eta2 = inv_gamma_mode(&hyper.eta2_prior, r.ss_mu, r.n_probes, &mut floor_hits);
        if !degenerate {
            p.xi2 = inv_gamma_mode(&hyper.xi2_prior, r.ss_delta, r.n_probes, &mut floor_hits);
        }
    }
    if floor_hits > 0 {
        warn!("{floor_hits} variance update(s) hit the floor {VARIANCE_FLOOR}");
    }
    Ok(GaussianUpdate { params: p, effects: new_effects, floor_hits, degenerate })
}

/// Penalized observed-data log posterior: marginal likelihood of the data
/// given globals and effects, plus effect densities and priors.
pub fn penalized_objective(
    loglik: f64,
    effects: Option<&[ProbeEffects]>,
    params: &GlobalParams,
    hyper: &Hyperpriors,
    mode: Mode,
) -> f64 {
    let mut v = loglik + hyper.log_prior(params, mode);
    if let Some(eff) = effects {
        for e in eff {
            v += effects_logdensity(Some(e), params).unwrap_or(f64::NEG_INFINITY);
        }
    }
    v
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub variance_floor_hits: usize,
    pub degenerate_iterations: usize,
    pub transition_fallbacks: usize,
    /// Iterations where the objective fell by more than round-off.
    pub objective_decreases: usize,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub variant: ModelVariant,
    pub params: GlobalParams,
    /// Probe effects per chromosome (hierarchical model only).
    pub effects: Option<Vec<ProbeEffects>>,
    /// Posteriors at the final parameters.
    pub posteriors: Vec<PosteriorTrack>,
    /// Objective after each E-step, starting from the initial parameters.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostics: FitDiagnostics,
}

impl FitResult {
    pub fn probability_tracks(&self, tracks: &[ProbeTrack]) -> Vec<ProbabilityTrack> {
        tracks
            .iter()
            .enumerate()
            .map(|(c, t)| ProbabilityTrack::from_posterior(t, &self.posteriors[c], self.effects.as_ref().map(|e| &e[c])))
            .collect()
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0)
}

/// Median distance between adjacent probes over all chromosomes.
pub fn median_spacing(tracks: &[ProbeTrack]) -> Option<f64> {
    let d: Vec<f64> = tracks.iter().flat_map(|t| t.distances().iter().copied()).collect();
    if d.is_empty() {
        return None;
    }
    Some(quantile(&sorted(d), 0.5))
}

/// Data-driven starting point. Background level and variance come from the
/// controls when present, otherwise from the treatment arrays.
pub fn default_init(tracks: &[ProbeTrack]) -> Result<GlobalParams> {
    let controls: Vec<f64> = tracks.iter().flat_map(|t| t.control_values().iter().copied()).collect();
    let treatment: Vec<f64> = tracks.iter().flat_map(|t| t.treatment_values().iter().copied()).collect();
    if treatment.is_empty() {
        return Err(Error::EmptyInput);
    }
    let background = if controls.len() >= 2 { sorted(controls) } else { sorted(treatment.clone()) };
    let treatment = sorted(treatment);
    let mu = quantile(&background, 0.5);
    let var = sample_variance(&background).max(VARIANCE_FLOOR);
    let delta = (quantile(&treatment, 0.95) - mu).max(var.sqrt());
    let spacing = median_spacing(tracks).unwrap_or(1.0).max(1.0);
    Ok(GlobalParams {
        mu,
        delta,
        sigma2: var,
        tau2: var,
        eta2: 0.1 * var,
        xi2: var,
        p0: 0.05,
        p1: 0.95,
        pi1: 0.01,
        lambda: 1.0 / (10.0 * spacing),
    })
}

pub(crate) fn check_tracks(tracks: &[ProbeTrack]) -> Result<()> {
    let first = tracks.first().ok_or(Error::EmptyInput)?;
    for t in tracks {
        if t.is_empty() {
            return Err(Error::InvalidTrack(format!("chromosome {} has no probes", t.chromosome_id)));
        }
        if t.n_treatment() != first.n_treatment() || t.n_control() != first.n_control() {
            return Err(Error::Shape(format!(
                "chromosome {} has {}+{} arrays, expected {}+{}",
                t.chromosome_id,
                t.n_treatment(),
                t.n_control(),
                first.n_treatment(),
                first.n_control()
            )));
        }
    }
    Ok(())
}

/// One conditional-maximization cycle from E-step statistics.
pub fn cm_cycle(
    tracks: &[ProbeTrack],
    stats: &EStepStats,
    effects: Option<&[ProbeEffects]>,
    params: &GlobalParams,
    hyper: &Hyperpriors,
    mode: Mode,
    fixed_bernoulli: Option<(f64, f64)>,
) -> Result<(GaussianUpdate, TransitionUpdate)> {
    let mut p = *params;
    match fixed_bernoulli {
        Some((p0, p1)) => {
            p.p0 = p0;
            p.p1 = p1;
        }
        None => (p.p0, p.p1) = update_bernoulli(stats, hyper, (p.p0, p.p1)),
    }
    let tr = update_transition(&stats.transitions, hyper, p.pi1, p.lambda)?;
    p.pi1 = tr.pi1;
    p.lambda = tr.lambda;
    let g = update_gaussians_and_effects(tracks, &stats.hyb_weights, effects, &p, hyper, mode)?;
    Ok((g, tr))
}

pub fn run_ecm(tracks: &[ProbeTrack], variant: ModelVariant, hyper: &Hyperpriors, options: &EcmOptions) -> Result<FitResult> {
    check_tracks(tracks)?;
    hyper.validate()?;
    let mode = variant.mode;
    let mut params = match options.init {
        Some(p) => p,
        None => default_init(tracks)?,
    };
    if let Some((p0, p1)) = options.fixed_bernoulli {
        params.p0 = p0;
        params.p1 = p1;
    }
    params.validate()?;
    let mut effects: Option<Vec<ProbeEffects>> = (mode == Mode::Hierarchical)
        .then(|| tracks.iter().map(|t| ProbeEffects::at_global(t.len(), &params)).collect());

    let mut diagnostics = FitDiagnostics::default();
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut stats = e_step(tracks, effects.as_deref(), &params)?;
    trace.push(penalized_objective(stats.loglik, effects.as_deref(), &params, hyper, mode));

    while iterations < options.max_iter {
        let (g, tr) = cm_cycle(tracks, &stats, effects.as_deref(), &params, hyper, mode, options.fixed_bernoulli)?;
        iterations += 1;
        diagnostics.variance_floor_hits += g.floor_hits;
        diagnostics.degenerate_iterations += usize::from(g.degenerate);
        diagnostics.transition_fallbacks += usize::from(tr.used_fallback);
        params = g.params;
        effects = g.effects;
        stats = e_step(tracks, effects.as_deref(), &params)?;
        let obj = penalized_objective(stats.loglik, effects.as_deref(), &params, hyper, mode);
        let prev = *trace.last().unwrap();
        if obj < prev - 1e-8 * prev.abs().max(1.0) {
            diagnostics.objective_decreases += 1;
            warn!("objective decreased at iteration {iterations}: {prev} -> {obj}");
        }
        trace.push(obj);
        debug!("ecm iteration {iterations}: objective {obj:.6}");
        if (obj - prev).abs() < options.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        warn!("ECM stopped after {iterations} iterations without converging");
    }
    Ok(FitResult { variant, params, effects, posteriors: stats.posteriors, trace, iterations, converged, diagnostics })
}
