//! Maximization of the region-process part of the objective over
//! `(pi1, lambda)`: damped Newton in `(logit pi1, log lambda)` with a
//! backtracking line search and a golden-section fallback.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::inference::PosteriorTrack;
use crate::model::{Hyperpriors, Matrix2};

/// Region-transition sufficient statistics with counts pooled by distance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransitionStats {
    /// Expected (or realized) first-probe state counts over chromosomes.
    pub initial: [f64; 2],
    /// `(distance, counts[e][e'])`, sorted by distance.
    pub by_distance: Vec<(f64, Matrix2)>,
}

#[derive(Default)]
struct Accumulator {
    initial: [f64; 2],
    groups: BTreeMap<u64, Matrix2>,
}

impl Accumulator {
    fn add(&mut self, d: f64, counts: &Matrix2) {
        let slot = self.groups.entry(d.to_bits()).or_insert([[0.0; 2]; 2]);
        for e in 0..2 {
            for f in 0..2 {
                slot[e][f] += counts[e][f];
            }
        }
    }

    fn finish(self) -> TransitionStats {
        TransitionStats {
            initial: self.initial,
            by_distance: self.groups.into_iter().map(|(k, v)| (f64::from_bits(k), v)).collect(),
        }
    }
}

impl TransitionStats {
    /// Expected counts from posterior pairwise marginals. Distances must be
    /// non-negative.
    pub fn from_posteriors<'a>(posteriors: impl IntoIterator<Item = (&'a PosteriorTrack, &'a [f64])>) -> Self {
        let mut acc = Accumulator::default();
        for (post, distances) in posteriors {
            acc.initial[0] += post.gamma[0][0];
            acc.initial[1] += post.gamma[0][1];
            for (x, &d) in post.xi.iter().zip(distances) {
                acc.add(d, x);
            }
        }
        acc.finish()
    }

    /// Realized counts along sampled paths.
    pub fn from_paths<'a>(paths: impl IntoIterator<Item = (&'a [u8], &'a [f64])>) -> Self {
        let mut acc = Accumulator::default();
        for (path, distances) in paths {
            if path.is_empty() {
                continue;
            }
            acc.initial[path[0] as usize] += 1.0;
            for (w, &d) in path.windows(2).zip(distances) {
                let mut c = [[0.0; 2]; 2];
                c[w[0] as usize][w[1] as usize] = 1.0;
                acc.add(d, &c);
            }
        }
        acc.finish()
    }

    pub fn total_transitions(&self) -> f64 {
        self.by_distance.iter().map(|(_, c)| c.iter().flatten().sum::<f64>()).sum()
    }
}

/// Objective value with gradient and Hessian in `(logit pi1, log lambda)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveEval {
    pub value: f64,
    pub gradient: [f64; 2],
    pub hessian: Matrix2,
}

fn check_domain(pi1: f64, lambda: f64) -> Result<()> {
    if !(pi1 > 0.0 && pi1 < 1.0) {
        return Err(Error::Domain(format!("pi1 = {pi1} must lie in (0, 1)")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda = {lambda} must be positive")));
    }
    Ok(())
}

/// Value only; cheaper than the full evaluation.
pub fn transition_value(pi1: f64, lambda: f64, stats: &TransitionStats, hyper: &Hyperpriors) -> Result<f64> {
    check_domain(pi1, lambda)?;
    let p = pi1;
    let ln_p = p.ln();
    let ln_1p = (-p).ln_1p();
    let mut value = stats.initial[0] * ln_1p + stats.initial[1] * ln_p;
    for (d, n) in &stats.by_distance {
        let q = -(-lambda * d).exp_m1();
        let ln_q = q.ln();
        value += weighted_ln(n[0][0], (-p * q).ln_1p())
            + weighted_ln(n[0][1], ln_p + ln_q)
            + weighted_ln(n[1][0], ln_1p + ln_q)
            + weighted_ln(n[1][1], (-(1.0 - p) * q).ln_1p());
    }
    Ok(value + hyper.log_prior_transition(pi1, lambda))
}

// Zero counts contribute nothing even where the log-probability is -inf.
#[inline]
fn weighted_ln(count: f64, ln_value: f64) -> f64 {
    if count == 0.0 {
        0.0
    } else {
        count * ln_value
    }
}

/// Expected log-probability of the region path plus the `pi1` and
/// `lambda` priors, with analytic derivatives in the unconstrained
/// coordinates `(logit pi1, log lambda)`.
pub fn transition_objective(pi1: f64, lambda: f64, stats: &TransitionStats, hyper: &Hyperpriors) -> Result<ObjectiveEval> {
    let value = transition_value(pi1, lambda, stats, hyper)?;
    let p = pi1;
    let pq = 1.0 - p;
    // First-probe counts and the beta prior share the form c1 ln p + c0 ln(1-p).
    let c1 = stats.initial[1] + hyper.pi_prior.a - 1.0;
    let c0 = stats.initial[0] + hyper.pi_prior.b - 1.0;
    let mut f_p = c1 / p - c0 / pq;
    let mut f_pp = -c1 / (p * p) - c0 / (pq * pq);
    let mut f_v = hyper.lambda_prior.shape - 1.0 - hyper.lambda_prior.rate * lambda;
    let mut f_vv = -hyper.lambda_prior.rate * lambda;
    let mut f_pv = 0.0;

    for (d, n) in &stats.by_distance {
        let x = lambda * d;
        let q = -(-x).exp_m1();
        let stay = 1.0 - q;
        let dq = x * stay;
        let d2q = x * stay * (1.0 - x);
        let t = [[1.0 - p * q, p * q], [pq * q, 1.0 - pq * q]];
        let dt_p = [[-q, q], [-q, q]];
        let dt_q = [[-p, p], [pq, -pq]];
        let dt_pq = [[-1.0, 1.0], [-1.0, 1.0]];
        let (mut g_p, mut g_q, mut h_pp, mut h_qq, mut h_pq) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for e in 0..2 {
            for f in 0..2 {
                let c = n[e][f];
                if c == 0.0 {
                    continue;
                }
                let inv = 1.0 / t[e][f];
                let a = dt_p[e][f] * inv;
                let b = dt_q[e][f] * inv;
                g_p += c * a;
                g_q += c * b;
                h_pp -= c * a * a;
                h_qq -= c * b * b;
                h_pq += c * (dt_pq[e][f] * inv - a * b);
            }
        }
        f_p += g_p;
        f_pp += h_pp;
        f_v += g_q * dq;
        f_vv += h_qq * dq * dq + g_q * d2q;
        f_pv += h_pq * dq;
    }

    let dp = p * pq;
    let d2p = dp * (1.0 - 2.0 * p);
    let gradient = [f_p * dp, f_v];
    let h_uu = f_pp * dp * dp + f_p * d2p;
    let h_uv = f_pv * dp;
    Ok(ObjectiveEval { value, gradient, hessian: [[h_uu, h_uv], [h_uv, f_vv]] })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionUpdate {
    pub pi1: f64,
    pub lambda: f64,
    pub value: f64,
    pub iterations: usize,
    pub used_fallback: bool,
}

fn to_natural(x: [f64; 2]) -> (f64, f64) {
    (1.0 / (1.0 + (-x[0]).exp()), x[1].exp())
}

fn to_unconstrained(pi1: f64, lambda: f64) -> [f64; 2] {
    [(pi1 / (1.0 - pi1)).ln(), lambda.ln()]
}

fn value_at(x: [f64; 2], stats: &TransitionStats, hyper: &Hyperpriors) -> f64 {
    let (p, l) = to_natural(x);
    transition_value(p, l, stats, hyper).unwrap_or(f64::NEG_INFINITY)
}

const MAX_NEWTON_ITERS: usize = 100;
const MAX_FAILED_STEPS: usize = 3;
const MAX_STEP: f64 = 4.0;
const STEP_TOL: f64 = 1e-10;

/// Maximize the transition objective starting from `(pi1, lambda)`. The
/// returned point never has a lower objective than the start.
pub fn update_transition(stats: &TransitionStats, hyper: &Hyperpriors, pi1: f64, lambda: f64) -> Result<TransitionUpdate> {
    let start = transition_objective(pi1, lambda, stats, hyper)?;
    let mut x = to_unconstrained(pi1, lambda);
    let mut f = start.value;
    let mut failures = 0;
    let mut iterations = 0;
    let mut used_fallback = false;

    while iterations < MAX_NEWTON_ITERS {
        iterations += 1;
        let (p, l) = to_natural(x);
        let ev = transition_objective(p, l, stats, hyper)?;
        let g = ev.gradient;
        let h = ev.hessian;
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let mut dir = if h[0][0] < 0.0 && det > 0.0 {
            [(-h[1][1] * g[0] + h[0][1] * g[1]) / det, (h[1][0] * g[0] - h[0][0] * g[1]) / det]
        } else {
            // Not concave here: scaled gradient ascent.
            let s = 1.0 / (1.0 + h[0][0].abs().max(h[1][1].abs()));
            [g[0] * s, g[1] * s]
        };
        let mut slope = g[0] * dir[0] + g[1] * dir[1];
        if !(slope > 0.0) {
            dir = g;
            slope = g[0] * g[0] + g[1] * g[1];
        }
        let norm = dir[0].hypot(dir[1]);
        if norm < STEP_TOL || slope == 0.0 {
            break;
        }
        if norm > MAX_STEP {
            let s = MAX_STEP / norm;
            dir = [dir[0] * s, dir[1] * s];
            slope *= s;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let cand = [x[0] + t * dir[0], x[1] + t * dir[1]];
            let fc = value_at(cand, stats, hyper);
            if fc >= f + 1e-4 * t * slope {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, fc)) => {
                let step = (t * dir[0]).hypot(t * dir[1]);
                x = cand;
                f = fc;
                if step < STEP_TOL {
                    break;
                }
            }
            None => {
                failures += 1;
                if failures >= MAX_FAILED_STEPS {
                    let (nx, nf) = golden_fallback(x, f, stats, hyper);
                    x = nx;
                    f = nf;
                    used_fallback = true;
                    break;
                }
            }
        }
    }

    if f < start.value {
        return Err(Error::Internal(format!(
            "transition update decreased the objective from {} to {f}",
            start.value
        )));
    }
    let (pi1, lambda) = to_natural(x);
    Ok(TransitionUpdate { pi1, lambda, value: f, iterations, used_fallback })
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Cyclic golden-section search along each unconstrained coordinate;
/// moves only on strict improvement.
fn golden_fallback(mut x: [f64; 2], mut f: f64, stats: &TransitionStats, hyper: &Hyperpriors) -> ([f64; 2], f64) {
    for _ in 0..8 {
        for k in 0..2 {
            let along = |s: f64| {
                let mut y = x;
                y[k] = s;
                value_at(y, stats, hyper)
            };
            let (mut a, mut b) = (x[k] - MAX_STEP, x[k] + MAX_STEP);
            let mut c = b - INV_PHI * (b - a);
            let mut d = a + INV_PHI * (b - a);
            let (mut fc, mut fd) = (along(c), along(d));
            for _ in 0..80 {
                if fc > fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - INV_PHI * (b - a);
                    fc = along(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + INV_PHI * (b - a);
                    fd = along(d);
                }
            }
            let s = 0.5 * (a + b);
            let fs = along(s);
            if fs > f {
                x[k] = s;
                f = fs;
            }
        }
    }
    (x, f)
}
