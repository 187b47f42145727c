use crate::error::{Error, Result};

/// One chromosome's probes in genomic order.
///
/// Intensities are stored row-major: row `i` holds the replicate values of
/// probe `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeTrack {
    pub chromosome_id: String,
    positions: Vec<u64>,
    distances: Vec<f64>,
    n_t: usize,
    n_c: usize,
    treatment: Vec<f64>,
    control: Vec<f64>,
}

impl ProbeTrack {
    /// Build a track from row-major intensity buffers of shape `N x n_t`
    /// and `N x n_c`.
    pub fn new(
        chromosome_id: impl Into<String>,
        positions: Vec<u64>,
        n_t: usize,
        treatment: Vec<f64>,
        n_c: usize,
        control: Vec<f64>,
    ) -> Result<Self> {
        let n = positions.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        if n_t == 0 {
            return Err(Error::InvalidTrack("at least one treatment replicate is required".into()));
        }
        if treatment.len() != n * n_t {
            return Err(Error::Shape(format!(
                "treatment has {} values, expected {} x {}",
                treatment.len(),
                n,
                n_t
            )));
        }
        if control.len() != n * n_c {
            return Err(Error::Shape(format!(
                "control has {} values, expected {} x {}",
                control.len(),
                n,
                n_c
            )));
        }
        for (i, w) in positions.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::InvalidTrack(format!(
                    "positions must be strictly increasing (probe {} at {} follows {})",
                    i + 1,
                    w[1],
                    w[0]
                )));
            }
        }
        if let Some(k) = treatment.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical { probe: k / n_t, context: Some("treatment intensity".into()) });
        }
        if let Some(k) = control.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical { probe: k / n_c, context: Some("control intensity".into()) });
        }
        let distances = positions.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
        Ok(Self {
            chromosome_id: chromosome_id.into(),
            positions,
            distances,
            n_t,
            n_c,
            treatment,
            control,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn n_treatment(&self) -> usize {
        self.n_t
    }

    pub fn n_control(&self) -> usize {
        self.n_c
    }

    pub fn positions(&self) -> &[u64] {
        &self.positions
    }

    /// Inter-probe distances `L[i+1] - L[i]`, length `N - 1`.
    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn treatment_row(&self, i: usize) -> &[f64] {
        &self.treatment[i * self.n_t..(i + 1) * self.n_t]
    }

    pub fn control_row(&self, i: usize) -> &[f64] {
        &self.control[i * self.n_c..(i + 1) * self.n_c]
    }

    pub fn treatment_values(&self) -> &[f64] {
        &self.treatment
    }

    pub fn control_values(&self) -> &[f64] {
        &self.control
    }

    /// Mean over treatment replicates of probe `i`.
    pub fn treatment_mean(&self, i: usize) -> f64 {
        let row = self.treatment_row(i);
        row.iter().sum::<f64>() / row.len() as f64
    }

    /// A copy with replicate columns reordered. `t_order` and `c_order` are
    /// permutations of `0..n_t` and `0..n_c`.
    pub fn with_permuted_replicates(&self, t_order: &[usize], c_order: &[usize]) -> Result<Self> {
        if !is_permutation(t_order, self.n_t) || !is_permutation(c_order, self.n_c) {
            return Err(Error::Shape("replicate order is not a permutation".into()));
        }
        let mut treatment = Vec::with_capacity(self.treatment.len());
        let mut control = Vec::with_capacity(self.control.len());
        for i in 0..self.len() {
            let t = self.treatment_row(i);
            treatment.extend(t_order.iter().map(|&j| t[j]));
            let c = self.control_row(i);
            control.extend(c_order.iter().map(|&j| c[j]));
        }
        Ok(Self { treatment, control, ..self.clone() })
    }
}

fn is_permutation(order: &[usize], n: usize) -> bool {
    if order.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &j in order {
        if j >= n || seen[j] {
            return false;
        }
        seen[j] = true;
    }
    true
}
