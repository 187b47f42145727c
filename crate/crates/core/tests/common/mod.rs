//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use tilehmm::inference::CollapsedEmissions;
use tilehmm::model::{emission_logdensity, GlobalParams, Matrix2, ProbeEffects, ProbeTrack};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn matmul(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// Matrix exponential by scaling and squaring with a truncated Taylor
/// series.
pub fn expm2(m: &Matrix2) -> Matrix2 {
    let norm = m.iter().map(|r| r[0].abs() + r[1].abs()).fold(0.0, f64::max);
    let mut s = 0;
    while norm / f64::from(1u32 << s.min(31)) > 0.5 && s < 60 {
        s += 1;
    }
    let scale = 0.5f64.powi(s);
    let a = [[m[0][0] * scale, m[0][1] * scale], [m[1][0] * scale, m[1][1] * scale]];
    let mut result = [[1.0, 0.0], [0.0, 1.0]];
    let mut term = [[1.0, 0.0], [0.0, 1.0]];
    for k in 1..30 {
        term = matmul(&term, &a);
        let f = 1.0 / k as f64;
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v *= f;
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        result = matmul(&result, &result);
    }
    result
}

/// Transition matrix over distance `d` from the rates alone.
pub fn oracle_transition(d: f64, pi1: f64, lambda: f64) -> Matrix2 {
    let up = lambda * pi1;
    let down = lambda * (1.0 - pi1);
    expm2(&[[-up * d, up * d], [down * d, -down * d]])
}

pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn random_params<R: Rng>(rng: &mut R) -> GlobalParams {
    GlobalParams {
        mu: rng.random_range(-1.0..1.0),
        delta: rng.random_range(0.5..4.0),
        sigma2: rng.random_range(0.1..1.0),
        tau2: rng.random_range(0.1..1.0),
        eta2: rng.random_range(0.01..0.5),
        xi2: rng.random_range(0.01..0.5),
        p0: rng.random_range(0.01..0.3),
        p1: rng.random_range(0.6..0.99),
        pi1: rng.random_range(0.05..0.6),
        lambda: rng.random_range(0.002..0.05),
    }
}

pub fn random_track<R: Rng>(rng: &mut R, n: usize, n_t: usize, n_c: usize) -> ProbeTrack {
    let mut pos = rng.random_range(0..1000u64);
    let mut positions = Vec::with_capacity(n);
    for _ in 0..n {
        positions.push(pos);
        pos += rng.random_range(1..150u64);
    }
    let treatment = (0..n * n_t).map(|_| rng.random_range(-1.0..4.0)).collect();
    let control = (0..n * n_c).map(|_| rng.random_range(-1.0..1.5)).collect();
    ProbeTrack::new("chrT", positions, n_t, treatment, n_c, control).unwrap()
}

pub fn random_effects<R: Rng>(rng: &mut R, n: usize, p: &GlobalParams) -> ProbeEffects {
    ProbeEffects {
        mu_i: (0..n).map(|_| p.mu + rng.random_range(-0.5..0.5)).collect(),
        delta_i: (0..n).map(|_| p.delta + rng.random_range(-0.5..0.5)).collect(),
    }
}

/// Posterior quantities obtained by enumeration.
#[derive(Debug, Clone)]
pub struct Enumerated {
    pub gamma: Vec<[f64; 2]>,
    pub xi: Vec<Matrix2>,
    /// `[i][h][e]`.
    pub joint_he: Vec<Matrix2>,
    pub loglik: f64,
}

fn bits(code: usize, n: usize) -> Vec<usize> {
    (0..n).map(|i| (code >> i) & 1).collect()
}

/// Sum over all `2^N` region paths given collapsed emissions.
pub fn enumerate_region_paths(em: &CollapsedEmissions, distances: &[f64], p: &GlobalParams) -> Enumerated {
    let n = em.log_b.len();
    let trans: Vec<Matrix2> = distances.iter().map(|&d| oracle_transition(d, p.pi1, p.lambda)).collect();
    let pi = [1.0 - p.pi1, p.pi1];
    let logs: Vec<f64> = (0..1usize << n)
        .map(|code| {
            let e = bits(code, n);
            let mut lp = pi[e[0]].ln() + em.log_b[0][e[0]];
            for i in 1..n {
                lp += trans[i - 1][e[i - 1]][e[i]].ln() + em.log_b[i][e[i]];
            }
            lp
        })
        .collect();
    let loglik = logsumexp(&logs);
    let mut gamma = vec![[0.0; 2]; n];
    let mut xi = vec![[[0.0; 2]; 2]; n.saturating_sub(1)];
    for (code, lp) in logs.iter().enumerate() {
        let w = (lp - loglik).exp();
        let e = bits(code, n);
        for i in 0..n {
            gamma[i][e[i]] += w;
            if i + 1 < n {
                xi[i][e[i]][e[i + 1]] += w;
            }
        }
    }
    let joint_he = gamma
        .iter()
        .zip(&em.log_r)
        .map(|(g, r)| {
            let h1 = [g[0] * r[0].exp(), g[1] * r[1].exp()];
            [[g[0] - h1[0], g[1] - h1[1]], h1]
        })
        .collect();
    Enumerated { gamma, xi, joint_he, loglik }
}

/// The literal four-state chain over `(H_i, E_i)`: sums over all `4^N`
/// configurations using raw emission densities.
pub fn enumerate_four_state(track: &ProbeTrack, effects: Option<&ProbeEffects>, p: &GlobalParams) -> Enumerated {
    let n = track.len();
    let d = track.distances();
    let trans: Vec<Matrix2> = d.iter().map(|&d| oracle_transition(d, p.pi1, p.lambda)).collect();
    let pi = [1.0 - p.pi1, p.pi1];
    let rate = [p.p0, p.p1];
    let bern = |h: usize, e: usize| if h == 1 { rate[e].ln() } else { (1.0 - rate[e]).ln() };
    let em: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            [
                emission_logdensity(track, i, 0, effects, p).unwrap(),
                emission_logdensity(track, i, 1, effects, p).unwrap(),
            ]
        })
        .collect();
    let logs: Vec<f64> = (0..1usize << (2 * n))
        .map(|code| {
            let e = bits(code, n);
            let h = bits(code >> n, n);
            let mut lp = pi[e[0]].ln() + bern(h[0], e[0]) + em[0][h[0]];
            for i in 1..n {
                lp += trans[i - 1][e[i - 1]][e[i]].ln() + bern(h[i], e[i]) + em[i][h[i]];
            }
            lp
        })
        .collect();
    let loglik = logsumexp(&logs);
    let mut gamma = vec![[0.0; 2]; n];
    let mut xi = vec![[[0.0; 2]; 2]; n.saturating_sub(1)];
    let mut joint_he = vec![[[0.0; 2]; 2]; n];
    for (code, lp) in logs.iter().enumerate() {
        let w = (lp - loglik).exp();
        let e = bits(code, n);
        let h = bits(code >> n, n);
        for i in 0..n {
            gamma[i][e[i]] += w;
            joint_he[i][h[i]][e[i]] += w;
            if i + 1 < n {
                xi[i][e[i]][e[i + 1]] += w;
            }
        }
    }
    Enumerated { gamma, xi, joint_he, loglik }
}

/// Largest absolute difference between two posterior summaries.
pub fn max_diff(
    gamma: &[[f64; 2]],
    xi: &[Matrix2],
    joint_he: &[Matrix2],
    loglik: f64,
    oracle: &Enumerated,
) -> f64 {
    let mut m = (loglik - oracle.loglik).abs();
    for (a, b) in gamma.iter().zip(&oracle.gamma) {
        m = m.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs());
    }
    for (a, b) in xi.iter().zip(&oracle.xi).chain(joint_he.iter().zip(&oracle.joint_he)) {
        for r in 0..2 {
            for c in 0..2 {
                m = m.max((a[r][c] - b[r][c]).abs());
            }
        }
    }
    m
}

pub fn chi_square_critical(df: usize, alpha: f64) -> f64 {
    ChiSquared::new(df as f64).unwrap().inverse_cdf(1.0 - alpha)
}

/// Pearson statistic of observed counts against expected probabilities.
pub fn chi_square_statistic(counts: &[u64], probs: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum()
}

/// Mean and batch-means standard error.
pub fn batch_mean_se(xs: &[f64], n_batches: usize) -> (f64, f64) {
    let n = xs.len();
    let size = n / n_batches;
    let mean = xs.iter().sum::<f64>() / n as f64;
    let batch_means: Vec<f64> =
        (0..n_batches).map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let var = batch_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n_batches - 1) as f64;
    (mean, (var / n_batches as f64).sqrt())
}
