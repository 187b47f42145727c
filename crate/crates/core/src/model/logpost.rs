use super::density::{effects_logdensity, emission_pair};
use super::params::{GlobalParams, Mode, ProbeEffects};
use super::priors::Hyperpriors;
use super::track::ProbeTrack;
use super::transition::transition_entries;
use crate::error::{Error, Result};

/// Components of the complete-data log posterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPosteriorTerms {
    pub initial: f64,
    pub transitions: f64,
    pub hybridization: f64,
    pub emissions: f64,
    pub effects: f64,
    pub priors: f64,
}

impl LogPosteriorTerms {
    pub fn total(&self) -> f64 {
        self.initial + self.transitions + self.hybridization + self.emissions + self.effects + self.priors
    }
}

/// Log posterior of parameters and latent layers `(H, E)` for one track.
/// `effects = None` selects the pooled model, which drops the random-effect
/// density and the `eta2`/`xi2` priors.
pub fn complete_data_logposterior(
    track: &ProbeTrack,
    hyb: &[u8],
    region: &[u8],
    effects: Option<&ProbeEffects>,
    params: &GlobalParams,
    hyper: &Hyperpriors,
) -> Result<LogPosteriorTerms> {
    let n = track.len();
    if hyb.len() != n || region.len() != n {
        return Err(Error::Shape(format!(
            "latent vectors have lengths ({}, {}), track has {n} probes",
            hyb.len(),
            region.len()
        )));
    }
    params.validate()?;
    if let Some(e) = effects {
        e.validate(n)?;
    }
    let pi = [params.pi0(), params.pi1];
    let initial = pi[region[0] as usize].ln();

    let mut transitions = 0.0;
    for (i, &d) in track.distances().iter().enumerate() {
        let t = transition_entries(d, params.pi1, params.lambda);
        transitions += t[region[i] as usize][region[i + 1] as usize].ln();
    }

    let mut hybridization = 0.0;
    let mut emissions = 0.0;
    for i in 0..n {
        let p = params.hybridization_rate(region[i] as usize);
        hybridization += if hyb[i] == 1 { p.ln() } else { (-p).ln_1p() };
        let (mu_i, delta_i) = ProbeEffects::probe_means(effects, params, i);
        let (l0, l1) = emission_pair(track, i, mu_i, delta_i, params);
        emissions += if hyb[i] == 1 { l1 } else { l0 };
    }

    let (effects_term, mode) = match effects {
        Some(_) => (effects_logdensity(effects, params)?, Mode::Hierarchical),
        None => (0.0, Mode::Pooled),
    };
    Ok(LogPosteriorTerms {
        initial,
        transitions,
        hybridization,
        emissions,
        effects: effects_term,
        priors: hyper.log_prior(params, mode),
    })
}
