use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Chromosome-shared model parameters.
///
/// The region process is parameterized by the stationary peak probability
/// `pi1` and the total switching rate `lambda` (1/bp). The directed rates
/// follow from those two: nonpeak to peak at `lambda * pi1`, peak to
/// nonpeak at `lambda * pi0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalParams {
    pub mu: f64,
    pub delta: f64,
    pub sigma2: f64,
    pub tau2: f64,
    pub eta2: f64,
    pub xi2: f64,
    pub p0: f64,
    pub p1: f64,
    pub pi1: f64,
    pub lambda: f64,
}

impl GlobalParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.mu, self.delta, self.sigma2, self.tau2, self.eta2, self.xi2, self.p0, self.p1, self.pi1,
            self.lambda,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams(format!("non-finite entry in {self:?}")));
        }
        for (name, v) in [("sigma2", self.sigma2), ("tau2", self.tau2), ("eta2", self.eta2), ("xi2", self.xi2)] {
            if v <= 0.0 {
                return Err(Error::InvalidParams(format!("{name} = {v} must be positive")));
            }
        }
        for (name, v) in [("p0", self.p0), ("p1", self.p1), ("pi1", self.pi1)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParams(format!("{name} = {v} must lie in (0, 1)")));
            }
        }
        if self.lambda <= 0.0 {
            return Err(Error::InvalidParams(format!("lambda = {} must be positive", self.lambda)));
        }
        Ok(())
    }

    pub fn pi0(&self) -> f64 {
        1.0 - self.pi1
    }

    /// Nonpeak to peak switching rate.
    pub fn rate_into_peak(&self) -> f64 {
        self.lambda * self.pi1
    }

    /// Peak to nonpeak switching rate.
    pub fn rate_out_of_peak(&self) -> f64 {
        self.lambda * self.pi0()
    }

    /// Mean peak length in bp, `1 / (lambda * pi0)`.
    pub fn expected_peak_length(&self) -> f64 {
        1.0 / self.rate_out_of_peak()
    }

    /// Mean nonpeak gap length in bp, `1 / (lambda * pi1)`.
    pub fn expected_gap_length(&self) -> f64 {
        1.0 / self.rate_into_peak()
    }

    /// The switching rate that yields a given mean peak length at `pi1`.
    pub fn lambda_for_peak_length(peak_length: f64, pi1: f64) -> f64 {
        1.0 / (peak_length * (1.0 - pi1))
    }

    pub fn hybridization_rate(&self, region: usize) -> f64 {
        if region == 0 {
            self.p0
        } else {
            self.p1
        }
    }
}

/// Whether probes carry their own background mean and enrichment offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Hierarchical,
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelVariant {
    pub mode: Mode,
    pub controls_present: bool,
}

impl ModelVariant {
    /// Pooled for a single treatment replicate without controls, hierarchical
    /// otherwise.
    pub fn auto(n_t: usize, n_c: usize) -> Self {
        let mode = if n_t == 1 && n_c == 0 { Mode::Pooled } else { Mode::Hierarchical };
        Self { mode, controls_present: n_c > 0 }
    }

    pub fn is_hierarchical(&self) -> bool {
        self.mode == Mode::Hierarchical
    }
}

/// Per-probe random effects `mu_i` and `delta_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeEffects {
    pub mu_i: Vec<f64>,
    pub delta_i: Vec<f64>,
}

impl ProbeEffects {
    /// Every probe at the global means.
    pub fn at_global(n: usize, params: &GlobalParams) -> Self {
        Self { mu_i: vec![params.mu; n], delta_i: vec![params.delta; n] }
    }

    pub fn len(&self) -> usize {
        self.mu_i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu_i.is_empty()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.mu_i.len() != n || self.delta_i.len() != n {
            return Err(Error::Shape(format!(
                "effects have lengths ({}, {}), track has {n} probes",
                self.mu_i.len(),
                self.delta_i.len()
            )));
        }
        if let Some(i) = self.mu_i.iter().zip(&self.delta_i).position(|(a, b)| !(a.is_finite() && b.is_finite())) {
            return Err(Error::Numerical { probe: i, context: Some("probe effect".into()) });
        }
        Ok(())
    }

    /// `(mu_i, delta_i)` for probe `i`, or the global means when `effects`
    /// is `None` (pooled model).
    #[inline]
    pub fn probe_means(effects: Option<&ProbeEffects>, params: &GlobalParams, i: usize) -> (f64, f64) {
        match effects {
            Some(e) => (e.mu_i[i], e.delta_i[i]),
            None => (params.mu, params.delta),
        }
    }
}
