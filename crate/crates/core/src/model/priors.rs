use serde::{Deserialize, Serialize};

use super::density::{beta_logpdf, gamma_logpdf, inv_gamma_logpdf, normal_logpdf};
use super::params::{GlobalParams, Mode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalPrior {
    pub mean: f64,
    pub var: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvGammaPrior {
    pub shape: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPrior {
    pub a: f64,
    pub b: f64,
}

/// Gamma prior in shape/rate form; `rate` carries units of bp since it
/// multiplies `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl NormalPrior {
    pub fn logpdf(&self, x: f64) -> f64 {
        normal_logpdf(x, self.mean, self.var)
    }
}

impl InvGammaPrior {
    pub fn logpdf(&self, x: f64) -> f64 {
        inv_gamma_logpdf(x, self.shape, self.scale)
    }

    pub fn mean(&self) -> f64 {
        self.scale / (self.shape - 1.0)
    }
}

impl BetaPrior {
    pub fn logpdf(&self, x: f64) -> f64 {
        beta_logpdf(x, self.a, self.b)
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub fn variance(&self) -> f64 {
        let s = self.a + self.b;
        self.a * self.b / (s * s * (s + 1.0))
    }
}

impl GammaPrior {
    pub fn logpdf(&self, x: f64) -> f64 {
        gamma_logpdf(x, self.shape, self.rate)
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn variance(&self) -> f64 {
        self.shape / (self.rate * self.rate)
    }
}

/// Prior distributions on every global parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperpriors {
    pub mu_prior: NormalPrior,
    pub delta_prior: NormalPrior,
    pub sigma2_prior: InvGammaPrior,
    pub tau2_prior: InvGammaPrior,
    pub eta2_prior: InvGammaPrior,
    pub xi2_prior: InvGammaPrior,
    pub p0_prior: BetaPrior,
    pub p1_prior: BetaPrior,
    pub pi_prior: BetaPrior,
    pub lambda_prior: GammaPrior,
}

impl Hyperpriors {
    /// Weak defaults scaled to the probe spacing of the data.
    pub fn default_for_spacing(median_spacing: f64) -> Self {
        let variance = InvGammaPrior { shape: 2.01, scale: 1.0 };
        Self {
            mu_prior: NormalPrior { mean: 0.0, var: 1e4 },
            delta_prior: NormalPrior { mean: 0.0, var: 1e4 },
            sigma2_prior: variance,
            tau2_prior: variance,
            eta2_prior: variance,
            xi2_prior: variance,
            p0_prior: BetaPrior { a: 1.0, b: 19.0 },
            p1_prior: BetaPrior { a: 19.0, b: 1.0 },
            pi_prior: BetaPrior { a: 1.0, b: 1.0 },
            lambda_prior: GammaPrior { shape: 1.1, rate: 10.0 * median_spacing.max(1.0) },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mu_prior.var", self.mu_prior.var),
            ("delta_prior.var", self.delta_prior.var),
            ("sigma2_prior.shape", self.sigma2_prior.shape),
            ("sigma2_prior.scale", self.sigma2_prior.scale),
            ("tau2_prior.shape", self.tau2_prior.shape),
            ("tau2_prior.scale", self.tau2_prior.scale),
            ("eta2_prior.shape", self.eta2_prior.shape),
            ("eta2_prior.scale", self.eta2_prior.scale),
            ("xi2_prior.shape", self.xi2_prior.shape),
            ("xi2_prior.scale", self.xi2_prior.scale),
            ("p0_prior.a", self.p0_prior.a),
            ("p0_prior.b", self.p0_prior.b),
            ("p1_prior.a", self.p1_prior.a),
            ("p1_prior.b", self.p1_prior.b),
            ("pi_prior.a", self.pi_prior.a),
            ("pi_prior.b", self.pi_prior.b),
            ("lambda_prior.shape", self.lambda_prior.shape),
            ("lambda_prior.rate", self.lambda_prior.rate),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("hyperprior {name} = {v} must be positive")));
            }
        }
        for (name, v) in [("mu_prior.mean", self.mu_prior.mean), ("delta_prior.mean", self.delta_prior.mean)] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("hyperprior {name} must be finite")));
            }
        }
        Ok(())
    }

    /// Log prior density of the Gaussian-layer globals. `eta2` and `xi2`
    /// only enter in the hierarchical model.
    pub fn log_prior_gaussian(&self, params: &GlobalParams, mode: Mode) -> f64 {
        let mut lp = self.mu_prior.logpdf(params.mu)
            + self.delta_prior.logpdf(params.delta)
            + self.sigma2_prior.logpdf(params.sigma2)
            + self.tau2_prior.logpdf(params.tau2);
        if mode == Mode::Hierarchical {
            lp += self.eta2_prior.logpdf(params.eta2) + self.xi2_prior.logpdf(params.xi2);
        }
        lp
    }

    pub fn log_prior_bernoulli(&self, params: &GlobalParams) -> f64 {
        self.p0_prior.logpdf(params.p0) + self.p1_prior.logpdf(params.p1)
    }

    pub fn log_prior_transition(&self, pi1: f64, lambda: f64) -> f64 {
        self.pi_prior.logpdf(pi1) + self.lambda_prior.logpdf(lambda)
    }

    /// Sum of all prior terms.
    pub fn log_prior(&self, params: &GlobalParams, mode: Mode) -> f64 {
        self.log_prior_gaussian(params, mode)
            + self.log_prior_bernoulli(params)
            + self.log_prior_transition(params.pi1, params.lambda)
    }
}
