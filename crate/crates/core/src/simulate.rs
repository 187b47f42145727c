//! Synthetic tracks drawn from the generative model, with every latent
//! layer kept as ground truth.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64(seed)`. Each stage reads its own ChaCha stream so that,
//! for example, changing the replicate count leaves layout and latent
//! layers untouched.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{transition_entries, GlobalParams, Mode, ModelVariant, ProbeEffects, ProbeTrack};

const STREAM_LAYOUT: u64 = 1;
const STREAM_PATH: u64 = 2;
const STREAM_HYB: u64 = 3;
const STREAM_EFFECTS: u64 = 4;
const STREAM_TREATMENT: u64 = 5;
const STREAM_CONTROL: u64 = 6;

/// Generator for one named stage of a seeded simulation.
pub fn stage_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub chromosome_id: String,
    pub n_probes: usize,
    pub mean_spacing: f64,
    /// Gaps are uniform on `mean_spacing * (1 +/- spacing_jitter)`.
    pub spacing_jitter: f64,
    pub params: GlobalParams,
    pub variant: ModelVariant,
    pub n_t: usize,
    pub n_c: usize,
    pub seed: u64,
}

impl SimConfig {
    /// Single treatment with a single control, 35 bp mean spacing.
    pub fn single_control(n_probes: usize, params: GlobalParams, seed: u64) -> Self {
        Self {
            chromosome_id: "chr1".into(),
            n_probes,
            mean_spacing: 35.0,
            spacing_jitter: 0.2,
            params,
            variant: ModelVariant::auto(1, 1),
            n_t: 1,
            n_c: 1,
            seed,
        }
    }

    /// Probabilities may sit on the boundary of the unit interval here,
    /// which fitting never allows.
    pub fn validate(&self) -> Result<()> {
        if self.n_probes == 0 {
            return Err(Error::InvalidParams("n_probes must be at least 1".into()));
        }
        if !(self.mean_spacing >= 1.0) {
            return Err(Error::InvalidParams("mean_spacing must be at least 1 bp".into()));
        }
        if !(0.0..1.0).contains(&self.spacing_jitter) {
            return Err(Error::InvalidParams("spacing_jitter must lie in [0, 1)".into()));
        }
        if self.n_t == 0 {
            return Err(Error::InvalidParams("at least one treatment replicate is required".into()));
        }
        if self.variant.mode == Mode::Hierarchical && self.n_t == 1 && self.n_c == 0 {
            log::debug!("hierarchical simulation with a single unreplicated treatment");
        }
        let p = &self.params;
        for (name, v) in [("p0", p.p0), ("p1", p.p1), ("pi1", p.pi1)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParams(format!("{name} = {v} must lie in [0, 1]")));
            }
        }
        for (name, v) in [("sigma2", p.sigma2), ("tau2", p.tau2), ("eta2", p.eta2), ("xi2", p.xi2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} = {v} must be positive")));
            }
        }
        if !(p.lambda >= 0.0 && p.lambda.is_finite()) || !p.mu.is_finite() || !p.delta.is_finite() {
            return Err(Error::InvalidParams("mu, delta and lambda must be finite, lambda >= 0".into()));
        }
        Ok(())
    }
}

/// A simulated track together with the latent layers that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub track: ProbeTrack,
    pub true_e: Vec<u8>,
    pub true_h: Vec<u8>,
    pub true_effects: ProbeEffects,
    pub config: SimConfig,
}

impl SyntheticDataset {
    /// Maximal runs of peak probes as inclusive index pairs.
    pub fn true_regions(&self) -> Vec<(usize, usize)> {
        crate::regions::runs(self.true_e.iter().map(|&e| e == 1))
    }
}

/// Probe coordinates starting at 0.
pub fn sample_probe_layout(config: &SimConfig) -> Result<Vec<u64>> {
    config.validate()?;
    let mut rng = stage_rng(config.seed, STREAM_LAYOUT);
    let mut positions = Vec::with_capacity(config.n_probes);
    let mut pos = 0u64;
    positions.push(pos);
    for _ in 1..config.n_probes {
        let u: f64 = if config.spacing_jitter > 0.0 { rng.random_range(-1.0..1.0) } else { 0.0 };
        let gap = (config.mean_spacing * (1.0 + config.spacing_jitter * u)).round().max(1.0);
        pos += gap as u64;
        positions.push(pos);
    }
    Ok(positions)
}

/// Region states at the given coordinates: the first from the stationary
/// distribution, each later one from the transition kernel over the gap.
/// Coordinates must be non-decreasing.
pub fn sample_region_path(positions: &[u64], params: &GlobalParams, seed: u64) -> Result<Vec<u8>> {
    if !(0.0..=1.0).contains(&params.pi1) || !(params.lambda >= 0.0) {
        return Err(Error::InvalidParams("pi1 must lie in [0, 1] and lambda must be non-negative".into()));
    }
    if positions.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidTrack("positions must be non-decreasing".into()));
    }
    let mut rng = stage_rng(seed, STREAM_PATH);
    let mut path = Vec::with_capacity(positions.len());
    if positions.is_empty() {
        return Ok(path);
    }
    let mut state = u8::from(rng.random::<f64>() < params.pi1);
    path.push(state);
    for w in positions.windows(2) {
        let t = transition_entries((w[1] - w[0]) as f64, params.pi1, params.lambda);
        state = u8::from(rng.random::<f64>() < t[state as usize][1]);
        path.push(state);
    }
    Ok(path)
}

/// Hybridization indicators given the region path.
pub fn sample_hybridization(region: &[u8], params: &GlobalParams, seed: u64) -> Vec<u8> {
    let mut rng = stage_rng(seed, STREAM_HYB);
    region
        .iter()
        .map(|&e| u8::from(rng.random::<f64>() < params.hybridization_rate(e as usize)))
        .collect()
}

fn normal(mean: f64, var: f64) -> Result<Normal<f64>> {
    Normal::new(mean, var.sqrt()).map_err(|e| Error::InvalidParams(e.to_string()))
}

/// Full simulation: layout, region path, hybridization, effects, noise.
pub fn sample_dataset(config: &SimConfig) -> Result<SyntheticDataset> {
    let positions = sample_probe_layout(config)?;
    let true_e = sample_region_path(&positions, &config.params, config.seed)?;
    let true_h = sample_hybridization(&true_e, &config.params, config.seed);
    dataset_from_latents(config, positions, true_e, true_h)
}

/// Draw random effects and intensities for fixed latent layers.
pub fn dataset_from_latents(
    config: &SimConfig,
    positions: Vec<u64>,
    true_e: Vec<u8>,
    true_h: Vec<u8>,
) -> Result<SyntheticDataset> {
    config.validate()?;
    let n = positions.len();
    if true_e.len() != n || true_h.len() != n {
        return Err(Error::Shape("latent layers must match the probe count".into()));
    }
    let p = &config.params;
    let true_effects = match config.variant.mode {
        Mode::Hierarchical => {
            let mut rng = stage_rng(config.seed, STREAM_EFFECTS);
            let mu_dist = normal(p.mu, p.eta2)?;
            let delta_dist = normal(p.delta, p.xi2)?;
            let mut mu_i = Vec::with_capacity(n);
            let mut delta_i = Vec::with_capacity(n);
            for _ in 0..n {
                mu_i.push(mu_dist.sample(&mut rng));
                delta_i.push(delta_dist.sample(&mut rng));
            }
            ProbeEffects { mu_i, delta_i }
        }
        Mode::Pooled => ProbeEffects::at_global(n, p),
    };

    let std_normal = Normal::new(0.0, 1.0).expect("standard normal");
    let (sd0, sd1) = (p.sigma2.sqrt(), p.tau2.sqrt());
    let mut rng_t = stage_rng(config.seed, STREAM_TREATMENT);
    let mut treatment = Vec::with_capacity(n * config.n_t);
    for i in 0..n {
        let (mean, sd) = if true_h[i] == 1 {
            (true_effects.mu_i[i] + true_effects.delta_i[i], sd1)
        } else {
            (true_effects.mu_i[i], sd0)
        };
        for _ in 0..config.n_t {
            let z: f64 = std_normal.sample(&mut rng_t);
            treatment.push(mean + sd * z);
        }
    }
    let mut rng_c = stage_rng(config.seed, STREAM_CONTROL);
    let mut control = Vec::with_capacity(n * config.n_c);
    for i in 0..n {
        for _ in 0..config.n_c {
            let z: f64 = std_normal.sample(&mut rng_c);
            control.push(true_effects.mu_i[i] + sd0 * z);
        }
    }
    let track =
        ProbeTrack::new(config.chromosome_id.clone(), positions, config.n_t, treatment, config.n_c, control)?;
    Ok(SyntheticDataset { track, true_e, true_h, true_effects, config: config.clone() })
}
