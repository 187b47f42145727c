//! Domain types, densities and the continuous-distance transition kernel.

mod density;
mod logpost;
mod params;
mod priors;
mod track;
mod transition;

pub use density::{
    beta_logpdf, effects_logdensity, emission_logdensity, gamma_logpdf, inv_gamma_logpdf,
    normal_logpdf,
};
pub(crate) use density::emission_pair;
#[cfg(test)]
pub(crate) use density::normal_logpdf_sum;
pub use logpost::{complete_data_logposterior, LogPosteriorTerms};
pub use params::{GlobalParams, Mode, ModelVariant, ProbeEffects};
pub use priors::{BetaPrior, GammaPrior, Hyperpriors, InvGammaPrior, NormalPrior};
pub use track::ProbeTrack;
pub use transition::{generator_matrix, transition_entries, transition_matrix, Matrix2};
