//! Gibbs sampling with a Metropolis step for the region-process rates.
//!
//! One sweep draws, in order: every region path by forward filtering and
//! backward sampling, the hybridization indicators given the path, all
//! Gaussian means as one block, the variances, the Bernoulli rates, and
//! finally `(logit pi1, log lambda)` by random-walk Metropolis with
//! proposal scales tuned during burn-in only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ecm::{check_tracks, default_init, transition_value, TransitionStats};
use crate::error::{Error, Result};
use crate::gaussian::{
    effect_conditional, empty_stats, global_means_conditional, probe_stats, residual_stats, Gaussian2, ProbeStats,
};
use crate::inference::{collapse_emissions, sample_state_path, CollapsedEmissions};
use crate::model::{BetaPrior, GlobalParams, Hyperpriors, InvGammaPrior, Mode, ModelVariant, ProbeEffects, ProbeTrack};
use crate::regions::ProbabilityTrack;

const CHROMOSOME_STREAM_BASE: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcOptions {
    pub n_sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Target acceptance rate of each Metropolis coordinate while adapting.
    pub adapt_target: f64,
    /// Initial random-walk standard deviations on `logit pi1` and `log lambda`.
    pub proposal_scales: [f64; 2],
    /// Drop every data term, so the chain targets the prior.
    pub prior_only: bool,
    pub init: Option<GlobalParams>,
}

impl Default for McmcOptions {
    fn default() -> Self {
        Self {
            n_sweeps: 10_500,
            burn_in: 500,
            thin: 1,
            seed: 1,
            adapt_target: 0.3,
            proposal_scales: [0.2, 0.2],
            prior_only: false,
            init: None,
        }
    }
}

impl McmcOptions {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::InvalidParams("thin must be at least 1".into()));
        }
        if self.burn_in >= self.n_sweeps {
            return Err(Error::InvalidParams(format!(
                "burn-in ({}) must be shorter than the run ({})",
                self.burn_in, self.n_sweeps
            )));
        }
        if !(self.adapt_target > 0.0 && self.adapt_target < 1.0) {
            return Err(Error::InvalidParams("adapt_target must lie in (0, 1)".into()));
        }
        if !self.proposal_scales.iter().all(|s| *s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidParams("proposal scales must be non-negative".into()));
        }
        Ok(())
    }
}

/// Full sampler state.
#[derive(Debug, Clone)]
pub struct McmcState {
    pub params: GlobalParams,
    pub effects: Option<Vec<ProbeEffects>>,
    pub region: Vec<Vec<u8>>,
    pub hyb: Vec<Vec<u8>>,
    /// Current proposal standard deviations.
    pub scales: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct PosteriorSummary {
    pub variant: ModelVariant,
    /// Posterior mean of `E_i` per chromosome.
    pub mean_e: Vec<Vec<f64>>,
    /// Posterior mean of `H_i E_i`.
    pub mean_he: Vec<Vec<f64>>,
    /// Posterior mean of `delta_i` (hierarchical model).
    pub mean_delta_i: Option<Vec<Vec<f64>>>,
    /// Retained draws of the globals.
    pub param_draws: Vec<GlobalParams>,
    /// Post-burn-in acceptance rate of each Metropolis coordinate.
    pub acceptance_rate: [f64; 2],
    /// Proposal scales frozen at the end of burn-in.
    pub scales: [f64; 2],
    pub final_state: McmcState,
}

impl PosteriorSummary {
    pub fn posterior_mean(&self) -> GlobalParams {
        let n = self.param_draws.len() as f64;
        let mut m = GlobalParams { mu: 0.0, delta: 0.0, sigma2: 0.0, tau2: 0.0, eta2: 0.0, xi2: 0.0, p0: 0.0, p1: 0.0, pi1: 0.0, lambda: 0.0 };
        for d in &self.param_draws {
            m.mu += d.mu / n;
            m.delta += d.delta / n;
            m.sigma2 += d.sigma2 / n;
            m.tau2 += d.tau2 / n;
            m.eta2 += d.eta2 / n;
            m.xi2 += d.xi2 / n;
            m.p0 += d.p0 / n;
            m.p1 += d.p1 / n;
            m.pi1 += d.pi1 / n;
            m.lambda += d.lambda / n;
        }
        m
    }

    pub fn probability_tracks(&self, tracks: &[ProbeTrack]) -> Vec<ProbabilityTrack> {
        tracks
            .iter()
            .enumerate()
            .map(|(c, t)| ProbabilityTrack {
                chromosome_id: t.chromosome_id.clone(),
                positions: t.positions().to_vec(),
                peak_prob: self.mean_e[c].clone(),
                hyb_peak_prob: self.mean_he[c].clone(),
                enrichment: match &self.mean_delta_i {
                    Some(d) => d[c].clone(),
                    None => (0..t.len()).map(|i| t.treatment_mean(i)).collect(),
                },
            })
            .collect()
    }
}

fn draw_gaussian2<R: Rng + ?Sized>(g: &Gaussian2, rng: &mut R) -> [f64; 2] {
    let m = g.mean();
    let c = g.covariance();
    let l00 = c[0][0].sqrt();
    let l10 = c[1][0] / l00;
    let l11 = (c[1][1] - l10 * l10).max(0.0).sqrt();
    let z0: f64 = rng.sample(StandardNormal);
    let z1: f64 = rng.sample(StandardNormal);
    [m[0] + l00 * z0, m[1] + l10 * z0 + l11 * z1]
}

fn draw_inv_gamma<R: Rng + ?Sized>(prior: &InvGammaPrior, ss: f64, n: f64, rng: &mut R) -> Result<f64> {
    let shape = prior.shape + 0.5 * n;
    let rate = prior.scale + 0.5 * ss;
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::Internal(format!("gamma({shape}, {rate}): {e}")))?;
    Ok(1.0 / g.sample(rng))
}

fn draw_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    let d = Beta::new(a, b).map_err(|e| Error::Internal(format!("beta({a}, {b}): {e}")))?;
    // Keep draws inside the open interval the model requires.
    Ok(d.sample(rng).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON))
}

/// Log target of the Metropolis step in unconstrained coordinates,
/// including the Jacobian `log(pi1 (1 - pi1) lambda)`.
fn transition_target(x: [f64; 2], stats: &TransitionStats, hyper: &Hyperpriors) -> f64 {
    let pi1 = 1.0 / (1.0 + (-x[0]).exp());
    let lambda = x[1].exp();
    match transition_value(pi1, lambda, stats, hyper) {
        Ok(v) if pi1 > 0.0 && pi1 < 1.0 => v + pi1.ln() + (-pi1).ln_1p() + x[1],
        _ => f64::NEG_INFINITY,
    }
}

struct Sampler<'a> {
    tracks: &'a [ProbeTrack],
    hyper: &'a Hyperpriors,
    mode: Mode,
    prior_only: bool,
    rng: ChaCha8Rng,
    chrom_rngs: Vec<ChaCha8Rng>,
}

impl Sampler<'_> {
    fn latent_step(&mut self, state: &mut McmcState) -> Result<()> {
        let params = state.params;
        let effects = state.effects.as_deref();
        let prior_only = self.prior_only;
        self.tracks
            .par_iter()
            .zip(self.chrom_rngs.par_iter_mut())
            .zip(state.region.par_iter_mut().zip(state.hyb.par_iter_mut()))
            .enumerate()
            .try_for_each(|(c, ((track, rng), (region, hyb)))| -> Result<()> {
                let em = if prior_only {
                    CollapsedEmissions::uninformative(track.len(), &params)
                } else {
                    collapse_emissions(track, effects.map(|e| &e[c]), &params)
                        .map_err(|e| e.in_chromosome(&track.chromosome_id))?
                };
                *region = sample_state_path(&em, track.distances(), &params, rng)
                    .map_err(|e| e.in_chromosome(&track.chromosome_id))?;
                for (i, h) in hyb.iter_mut().enumerate() {
                    let p = em.log_r[i][region[i] as usize].exp();
                    *h = u8::from(rng.random::<f64>() < p);
                }
                Ok(())
            })
    }

    fn gaussian_step(&mut self, state: &mut McmcState) -> Result<()> {
        let p = &mut state.params;
        let weights: Vec<Vec<f64>> = state.hyb.iter().map(|h| h.iter().map(|&v| f64::from(v)).collect()).collect();
        let stats: Vec<Vec<ProbeStats>> = if self.prior_only {
            self.tracks.iter().map(|t| empty_stats(t.len())).collect()
        } else {
            self.tracks.iter().zip(&weights).map(|(t, w)| probe_stats(t, w, p.sigma2, p.tau2)).collect()
        };
        let g = draw_gaussian2(&global_means_conditional(&stats, p, self.hyper, self.mode), &mut self.rng);
        p.mu = g[0];
        p.delta = g[1];
        if self.mode == Mode::Hierarchical {
            let mut effects = Vec::with_capacity(stats.len());
            for st in &stats {
                let mut e = ProbeEffects { mu_i: Vec::with_capacity(st.len()), delta_i: Vec::with_capacity(st.len()) };
                for s in st {
                    let d = draw_gaussian2(&effect_conditional(s, p.mu, p.delta, p.eta2, p.xi2), &mut self.rng);
                    e.mu_i.push(d[0]);
                    e.delta_i.push(d[1]);
                }
                effects.push(e);
            }
            state.effects = Some(effects);
        }

        let r = residual_stats(self.tracks, &weights, state.effects.as_deref(), p);
        let (ss0, n0, ss1, n1) = if self.prior_only { (0.0, 0.0, 0.0, 0.0) } else { (r.ss0, r.n0, r.ss1, r.n1) };
        p.sigma2 = draw_inv_gamma(&self.hyper.sigma2_prior, ss0, n0, &mut self.rng)?;
        p.tau2 = draw_inv_gamma(&self.hyper.tau2_prior, ss1, n1, &mut self.rng)?;
        if self.mode == Mode::Hierarchical {
            p.eta2 = draw_inv_gamma(&self.hyper.eta2_prior, r.ss_mu, r.n_probes, &mut self.rng)?;
            p.xi2 = draw_inv_gamma(&self.hyper.xi2_prior, r.ss_delta, r.n_probes, &mut self.rng)?;
        }
        Ok(())
    }

    fn bernoulli_step(&mut self, state: &mut McmcState) -> Result<()> {
        let mut n = [0.0; 2];
        let mut m = [0.0; 2];
        for (region, hyb) in state.region.iter().zip(&state.hyb) {
            for (&e, &h) in region.iter().zip(hyb) {
                n[e as usize] += 1.0;
                m[e as usize] += f64::from(h);
            }
        }
        let c0 = beta_conditional(&self.hyper.p0_prior, m[0], n[0]);
        let c1 = beta_conditional(&self.hyper.p1_prior, m[1], n[1]);
        state.params.p0 = draw_beta(c0.a, c0.b, &mut self.rng)?;
        state.params.p1 = draw_beta(c1.a, c1.b, &mut self.rng)?;
        Ok(())
    }

    fn transition_step(&mut self, state: &mut McmcState) -> [bool; 2] {
        let stats = TransitionStats::from_paths(
            state.region.iter().map(|r| r.as_slice()).zip(self.tracks.iter().map(|t| t.distances())),
        );
        mh_update_transition(&mut state.params, &stats, self.hyper, state.scales, &mut self.rng)
    }
}

/// Random-walk Metropolis on `(logit pi1, log lambda)`, one coordinate at
/// a time, targeting the region-path likelihood of `stats` times the
/// priors. Returns which coordinates moved.
pub fn mh_update_transition<R: Rng + ?Sized>(
    params: &mut GlobalParams,
    stats: &TransitionStats,
    hyper: &Hyperpriors,
    scales: [f64; 2],
    rng: &mut R,
) -> [bool; 2] {
    let mut x = [(params.pi1 / (1.0 - params.pi1)).ln(), params.lambda.ln()];
    let mut current = transition_target(x, stats, hyper);
    let mut accepted = [false; 2];
    for k in 0..2 {
        let z: f64 = rng.sample(StandardNormal);
        let mut cand = x;
        cand[k] += scales[k] * z;
        let proposed = transition_target(cand, stats, hyper);
        let u: f64 = rng.random();
        if u.ln() < proposed - current {
            x = cand;
            current = proposed;
            accepted[k] = true;
        }
    }
    params.pi1 = 1.0 / (1.0 + (-x[0]).exp());
    params.lambda = x[1].exp();
    accepted
}

/// Beta full conditional of a hybridization rate given `m` hybridized
/// probes out of `n`.
pub fn beta_conditional(prior: &BetaPrior, m: f64, n: f64) -> BetaPrior {
    BetaPrior { a: prior.a + m, b: prior.b + n - m }
}

/// Run the sampler. The result depends only on the data, options and
/// seed, never on the thread count.
pub fn run_mcmc(tracks: &[ProbeTrack], variant: ModelVariant, hyper: &Hyperpriors, options: &McmcOptions) -> Result<PosteriorSummary> {
    check_tracks(tracks)?;
    hyper.validate()?;
    options.validate()?;
    let params = match options.init {
        Some(p) => p,
        None => default_init(tracks)?,
    };
    params.validate()?;
    let mode = variant.mode;

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    rng.set_stream(0);
    let chrom_rngs = (0..tracks.len())
        .map(|c| {
            let mut r = ChaCha8Rng::seed_from_u64(options.seed);
            r.set_stream(CHROMOSOME_STREAM_BASE + c as u64);
            r
        })
        .collect();
    let mut sampler = Sampler { tracks, hyper, mode, prior_only: options.prior_only, rng, chrom_rngs };
    let mut state = McmcState {
        params,
        effects: (mode == Mode::Hierarchical).then(|| tracks.iter().map(|t| ProbeEffects::at_global(t.len(), &params)).collect()),
        region: tracks.iter().map(|t| vec![0; t.len()]).collect(),
        hyb: tracks.iter().map(|t| vec![0; t.len()]).collect(),
        scales: options.proposal_scales,
    };

    let mut mean_e: Vec<Vec<f64>> = tracks.iter().map(|t| vec![0.0; t.len()]).collect();
    let mut mean_he = mean_e.clone();
    let mut mean_delta_i = (mode == Mode::Hierarchical).then(|| mean_e.clone());
    let mut param_draws = Vec::new();
    let mut accepts = [0usize; 2];
    let mut post_burn = 0usize;

    for sweep in 0..options.n_sweeps {
        sampler.latent_step(&mut state)?;
        sampler.gaussian_step(&mut state)?;
        sampler.bernoulli_step(&mut state)?;
        let acc = sampler.transition_step(&mut state);
        if let Err(e) = state.params.validate() {
            return Err(Error::Internal(format!("sweep {sweep}: {e}; state {:?}", state.params)));
        }

        if sweep < options.burn_in {
            let rate = ((sweep + 1) as f64).powf(-0.6);
            for k in 0..2 {
                let a = if acc[k] { 1.0 } else { 0.0 };
                state.scales[k] *= (rate * (a - options.adapt_target)).exp();
            }
            continue;
        }
        post_burn += 1;
        for k in 0..2 {
            accepts[k] += usize::from(acc[k]);
        }
        if (sweep - options.burn_in) % options.thin != 0 {
            continue;
        }
        param_draws.push(state.params);
        for c in 0..tracks.len() {
            for i in 0..tracks[c].len() {
                let e = f64::from(state.region[c][i]);
                mean_e[c][i] += e;
                mean_he[c][i] += e * f64::from(state.hyb[c][i]);
            }
            if let (Some(acc), Some(eff)) = (mean_delta_i.as_mut(), state.effects.as_ref()) {
                for (a, d) in acc[c].iter_mut().zip(&eff[c].delta_i) {
                    *a += d;
                }
            }
        }
    }

    let kept = param_draws.len() as f64;
    for v in mean_e.iter_mut().chain(mean_he.iter_mut()).chain(mean_delta_i.iter_mut().flatten()) {
        v.iter_mut().for_each(|x| *x /= kept);
    }
    let scales = state.scales;
    Ok(PosteriorSummary {
        variant,
        mean_e,
        mean_he,
        mean_delta_i,
        param_draws,
        acceptance_rate: [accepts[0] as f64 / post_burn as f64, accepts[1] as f64 / post_burn as f64],
        scales,
        final_state: state,
    })
}
