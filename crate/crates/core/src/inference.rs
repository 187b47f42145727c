//! Exact inference over the region chain with the hybridization layer
//! marginalized probe by probe.
//!
//! The (H, E) pair forms a four-state chain, but H is conditionally
//! independent across probes given E, so the chain runs over E alone with
//! collapsed emissions and the H posteriors are recovered afterwards.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{transition_entries, GlobalParams, Matrix2, ProbeEffects, ProbeTrack};

#[inline]
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Per-probe emission terms with H summed out.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapsedEmissions {
    /// `log f(data_i | E_i = e)`.
    pub log_b: Vec<[f64; 2]>,
    /// `log P(H_i = 1 | E_i = e, data_i)`.
    pub log_r: Vec<[f64; 2]>,
}

impl CollapsedEmissions {
    pub fn len(&self) -> usize {
        self.log_b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_b.is_empty()
    }

    /// Emissions that carry no information about E or H: the posterior of
    /// the latent layers equals their prior.
    pub fn uninformative(n: usize, params: &GlobalParams) -> Self {
        Self { log_b: vec![[0.0, 0.0]; n], log_r: vec![[params.p0.ln(), params.p1.ln()]; n] }
    }
}

/// Marginalize the hybridization state of every probe under each region
/// state. `effects = None` uses the global means (pooled model).
pub fn collapse_emissions(
    track: &ProbeTrack,
    effects: Option<&ProbeEffects>,
    params: &GlobalParams,
) -> Result<CollapsedEmissions> {
    let n = track.len();
    if let Some(e) = effects {
        e.validate(n)?;
    }
    let log_p = [params.p0.ln(), params.p1.ln()];
    let log_q = [(-params.p0).ln_1p(), (-params.p1).ln_1p()];
    let mut log_b = Vec::with_capacity(n);
    let mut log_r = Vec::with_capacity(n);
    for i in 0..n {
        let (mu_i, delta_i) = ProbeEffects::probe_means(effects, params, i);
        let (l0, l1) = crate::model::emission_pair(track, i, mu_i, delta_i, params);
        if !(l0.is_finite() && l1.is_finite()) {
            return Err(Error::Numerical { probe: i, context: Some("emission density".into()) });
        }
        let mut b = [0.0; 2];
        let mut r = [0.0; 2];
        for e in 0..2 {
            let hyb = log_p[e] + l1;
            b[e] = log_add_exp(log_q[e] + l0, hyb);
            r[e] = (hyb - b[e]).min(0.0);
        }
        log_b.push(b);
        log_r.push(r);
    }
    Ok(CollapsedEmissions { log_b, log_r })
}

/// Posterior marginals of the latent layers for one track.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTrack {
    /// `P(E_i = e | data)`.
    pub gamma: Vec<[f64; 2]>,
    /// `P(E_i = e, E_{i+1} = e' | data)`, length `N - 1`.
    pub xi: Vec<Matrix2>,
    /// `P(H_i = h, E_i = e | data)` indexed `[i][h][e]`.
    pub joint_he: Vec<Matrix2>,
    /// Observed-data log-likelihood.
    pub loglik: f64,
}

impl PosteriorTrack {
    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn peak_prob(&self, i: usize) -> f64 {
        self.gamma[i][1]
    }

    /// `P(H_i = 1 | data)`.
    pub fn hyb_prob(&self, i: usize) -> f64 {
        self.joint_he[i][1][0] + self.joint_he[i][1][1]
    }

    /// `P(H_i = 1, E_i = 1 | data)`.
    pub fn hyb_peak_prob(&self, i: usize) -> f64 {
        self.joint_he[i][1][1]
    }

    /// Largest violation of the normalization and consistency identities.
    pub fn max_invariant_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, g) in self.gamma.iter().enumerate() {
            worst = worst.max((g[0] + g[1] - 1.0).abs());
            let j = &self.joint_he[i];
            worst = worst.max((j[0][0] + j[0][1] + j[1][0] + j[1][1] - 1.0).abs());
            for e in 0..2 {
                worst = worst.max((j[0][e] + j[1][e] - g[e]).abs());
            }
        }
        for (i, x) in self.xi.iter().enumerate() {
            worst = worst.max((x[0][0] + x[0][1] + x[1][0] + x[1][1] - 1.0).abs());
            for e in 0..2 {
                worst = worst.max((x[e][0] + x[e][1] - self.gamma[i][e]).abs());
                worst = worst.max((x[0][e] + x[1][e] - self.gamma[i + 1][e]).abs());
            }
        }
        worst
    }
}

/// Normalized forward pass. Keeps everything the backward pass and the
/// path sampler need.
struct Forward {
    alpha: Vec<[f64; 2]>,
    /// Emissions rescaled by their per-probe maximum.
    b: Vec<[f64; 2]>,
    /// Per-step normalizers of the rescaled recursion.
    c: Vec<f64>,
    trans: Vec<Matrix2>,
    loglik: f64,
}

fn forward(em: &CollapsedEmissions, distances: &[f64], params: &GlobalParams) -> Result<Forward> {
    let n = em.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if distances.len() != n - 1 {
        return Err(Error::Shape(format!("{} distances for {n} probes", distances.len())));
    }
    let mut alpha = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    let mut trans = Vec::with_capacity(n.saturating_sub(1));
    let mut loglik = 0.0;
    let mut prev = [params.pi0(), params.pi1];
    for i in 0..n {
        let lb = em.log_b[i];
        let m = lb[0].max(lb[1]);
        let bi = [(lb[0] - m).exp(), (lb[1] - m).exp()];
        let pred = if i == 0 {
            prev
        } else {
            let t = transition_entries(distances[i - 1], params.pi1, params.lambda);
            trans.push(t);
            [prev[0] * t[0][0] + prev[1] * t[1][0], prev[0] * t[0][1] + prev[1] * t[1][1]]
        };
        let a = [pred[0] * bi[0], pred[1] * bi[1]];
        let ci = a[0] + a[1];
        if !(ci > 0.0 && ci.is_finite() && m.is_finite()) {
            return Err(Error::Numerical { probe: i, context: Some("forward recursion".into()) });
        }
        prev = [a[0] / ci, a[1] / ci];
        loglik += ci.ln() + m;
        alpha.push(prev);
        b.push(bi);
        c.push(ci);
    }
    Ok(Forward { alpha, b, c, trans, loglik })
}

/// Scaled forward-backward pass over the region chain.
pub fn forward_backward(em: &CollapsedEmissions, distances: &[f64], params: &GlobalParams) -> Result<PosteriorTrack> {
    let fw = forward(em, distances, params)?;
    let n = em.len();
    let mut beta = vec![[1.0, 1.0]; n];
    let mut xi = vec![[[0.0; 2]; 2]; n - 1];
    for i in (0..n - 1).rev() {
        let t = &fw.trans[i];
        let w = [fw.b[i + 1][0] * beta[i + 1][0] / fw.c[i + 1], fw.b[i + 1][1] * beta[i + 1][1] / fw.c[i + 1]];
        beta[i] = [t[0][0] * w[0] + t[0][1] * w[1], t[1][0] * w[0] + t[1][1] * w[1]];
        let a = fw.alpha[i];
        xi[i] = [[a[0] * t[0][0] * w[0], a[0] * t[0][1] * w[1]], [a[1] * t[1][0] * w[0], a[1] * t[1][1] * w[1]]];
    }
    let mut gamma = Vec::with_capacity(n);
    let mut joint_he = Vec::with_capacity(n);
    for i in 0..n {
        let g = [fw.alpha[i][0] * beta[i][0], fw.alpha[i][1] * beta[i][1]];
        let r = [em.log_r[i][0].exp(), em.log_r[i][1].exp()];
        let hyb = [g[0] * r[0], g[1] * r[1]];
        joint_he.push([[g[0] - hyb[0], g[1] - hyb[1]], hyb]);
        gamma.push(g);
    }
    Ok(PosteriorTrack { gamma, xi, joint_he, loglik: fw.loglik })
}

/// Draw a region path from its exact posterior: forward filtering, then
/// backward sampling of each state given its successor.
pub fn sample_state_path<R: Rng + ?Sized>(
    em: &CollapsedEmissions,
    distances: &[f64],
    params: &GlobalParams,
    rng: &mut R,
) -> Result<Vec<u8>> {
    let fw = forward(em, distances, params)?;
    let n = em.len();
    let mut path = vec![0u8; n];
    let last = fw.alpha[n - 1];
    path[n - 1] = u8::from(rng.random::<f64>() * (last[0] + last[1]) >= last[0]);
    for i in (0..n - 1).rev() {
        let next = path[i + 1] as usize;
        let t = &fw.trans[i];
        let w0 = fw.alpha[i][0] * t[0][next];
        let w1 = fw.alpha[i][1] * t[1][next];
        path[i] = u8::from(rng.random::<f64>() * (w0 + w1) >= w0);
    }
    Ok(path)
}
