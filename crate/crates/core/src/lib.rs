//! Segmentation of tiling-array intensities with a two-layer hidden Markov
//! model over irregularly spaced probes.
//!
//! A region process `E` (peak or nonpeak) runs in continuous genomic
//! distance; given `E`, each probe independently hybridizes (`H`) with a
//! region-dependent probability, and intensities are Gaussian around
//! probe-specific means. Parameters are fitted by ECM or sampled by MCMC,
//! and contiguous high-probability stretches are reported as regions.

pub mod cli;
pub mod ecm;
pub mod error;
mod gaussian;
pub mod inference;
pub mod io;
pub mod mcmc;
pub mod model;
pub mod regions;
pub mod simulate;

pub use error::{Error, Result};
