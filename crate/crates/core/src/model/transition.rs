use super::params::GlobalParams;
use crate::error::{Error, Result};

pub type Matrix2 = [[f64; 2]; 2];

/// Region-state transition probabilities across a gap of `d` bp, without
/// validation. State 0 is nonpeak, 1 is peak.
#[inline]
pub fn transition_entries(d: f64, pi1: f64, lambda: f64) -> Matrix2 {
    let pi0 = 1.0 - pi1;
    let x = -lambda * d;
    let stay = x.exp();
    let leave = -x.exp_m1();
    [[pi0 + pi1 * stay, pi1 * leave], [pi0 * leave, pi1 + pi0 * stay]]
}

/// Row-stochastic transition matrix of the two-state region process over a
/// distance of `d` bp.
pub fn transition_matrix(d: f64, params: &GlobalParams) -> Result<Matrix2> {
    if !(d >= 0.0) {
        return Err(Error::InvalidDistance(d));
    }
    params.validate()?;
    Ok(transition_entries(d, params.pi1, params.lambda))
}

/// Rate matrix of the region process: nonpeak leaves at `lambda * pi1`,
/// peak leaves at `lambda * pi0`.
pub fn generator_matrix(params: &GlobalParams) -> Result<Matrix2> {
    params.validate()?;
    let into_peak = params.rate_into_peak();
    let out_of_peak = params.rate_out_of_peak();
    Ok([[-into_peak, into_peak], [out_of_peak, -out_of_peak]])
}
