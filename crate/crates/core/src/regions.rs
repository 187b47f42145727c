//! Region calling: runs of probes above a peak-probability cutoff, scored by
//! an H-weighted mean enrichment and ranked.

use std::cmp::Ordering;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::PosteriorTrack;
use crate::model::{ProbeEffects, ProbeTrack};

/// Probe length used for region end coordinates unless overridden.
pub const DEFAULT_PROBE_LENGTH: u64 = 25;

const MIN_WEIGHT_SUM: f64 = 1e-12;

/// Per-probe summary a region caller needs, independent of the estimator
/// that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTrack {
    pub chromosome_id: String,
    pub positions: Vec<u64>,
    /// `P(E_i = 1)`.
    pub peak_prob: Vec<f64>,
    /// `P(H_i = 1, E_i = 1)`, the scoring weight.
    pub hyb_peak_prob: Vec<f64>,
    /// Per-probe enrichment: the `delta_i` estimate in the hierarchical
    /// model, the mean treatment intensity in the pooled model.
    pub enrichment: Vec<f64>,
}

impl ProbabilityTrack {
    pub fn from_posterior(track: &ProbeTrack, post: &PosteriorTrack, effects: Option<&ProbeEffects>) -> Self {
        let n = track.len();
        let enrichment = match effects {
            Some(e) => e.delta_i.clone(),
            None => (0..n).map(|i| track.treatment_mean(i)).collect(),
        };
        Self {
            chromosome_id: track.chromosome_id.clone(),
            positions: track.positions().to_vec(),
            peak_prob: (0..n).map(|i| post.peak_prob(i)).collect(),
            hyb_peak_prob: (0..n).map(|i| post.hyb_peak_prob(i)).collect(),
            enrichment,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        if self.peak_prob.len() != n || self.hyb_peak_prob.len() != n || self.enrichment.len() != n {
            return Err(Error::Shape("probability track columns differ in length".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub chromosome_id: String,
    /// Coordinate of the first probe.
    pub start: u64,
    /// Coordinate of the last probe plus the probe length (exclusive).
    pub end: u64,
    pub first_probe: usize,
    pub last_probe: usize,
    pub score: f64,
    pub peak_probability: f64,
    /// Set when the weights summed to zero and the score is an unweighted
    /// mean.
    pub unweighted: bool,
}

impl Region {
    pub fn n_probes(&self) -> usize {
        self.last_probe - self.first_probe + 1
    }

    pub fn probes(&self) -> RangeInclusive<usize> {
        self.first_probe..=self.last_probe
    }
}

/// Maximal runs of `true` as inclusive index pairs.
pub fn runs(mask: impl IntoIterator<Item = bool>) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut open: Option<usize> = None;
    let mut len = 0;
    for (i, m) in mask.into_iter().enumerate() {
        match (m, open) {
            (true, None) => open = Some(i),
            (false, Some(s)) => {
                out.push((s, i - 1));
                open = None;
            }
            _ => {}
        }
        len = i + 1;
    }
    if let Some(s) = open {
        out.push((s, len - 1));
    }
    out
}

/// Weighted mean of `values` with `weights`; falls back to the plain mean
/// (flagged `true`) when the weights vanish.
pub fn weighted_score(weights: &[f64], values: &[f64]) -> (f64, bool) {
    let wsum: f64 = weights.iter().sum();
    if wsum < MIN_WEIGHT_SUM {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        return (mean, true);
    }
    let num: f64 = weights.iter().zip(values).map(|(w, v)| w * v).sum();
    (num / wsum, false)
}

/// Score of the probes `first..=last` of `track`.
pub fn score_region(track: &ProbabilityTrack, first: usize, last: usize) -> (f64, bool) {
    weighted_score(&track.hyb_peak_prob[first..=last], &track.enrichment[first..=last])
}

/// Maximal runs with `P(E_i = 1) >= cutoff` of at least `min_probes`
/// probes, scored, in genomic order.
pub fn call_regions(track: &ProbabilityTrack, cutoff: f64, min_probes: usize, probe_length: u64) -> Result<Vec<Region>> {
    track.validate()?;
    if !(cutoff > 0.0 && cutoff < 1.0) {
        return Err(Error::InvalidParams(format!("cutoff {cutoff} must lie in (0, 1)")));
    }
    if min_probes == 0 {
        return Err(Error::InvalidParams("min_probes must be at least 1".into()));
    }
    if probe_length == 0 {
        return Err(Error::InvalidParams("probe length must be at least 1".into()));
    }
    let regions = runs(track.peak_prob.iter().map(|&p| p >= cutoff))
        .into_iter()
        .filter(|(s, e)| e - s + 1 >= min_probes)
        .map(|(s, e)| {
            let (score, unweighted) = score_region(track, s, e);
            Region {
                chromosome_id: track.chromosome_id.clone(),
                start: track.positions[s],
                end: track.positions[e] + probe_length,
                first_probe: s,
                last_probe: e,
                score,
                peak_probability: track.peak_prob[s..=e].iter().copied().fold(0.0, f64::max),
                unweighted,
            }
        })
        .collect();
    Ok(regions)
}

/// Descending score; ties by chromosome then start.
pub fn rank_regions(mut regions: Vec<Region>) -> Vec<Region> {
    regions.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.chromosome_id.cmp(&b.chromosome_id))
            .then_with(|| a.start.cmp(&b.start))
    });
    regions
}
