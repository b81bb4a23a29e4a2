//! Finite-truncation reduction engines: straightening of the transport operator
//! ω·∂_φ + V∂_θ by θ-reparametrizations, and KAM elimination of a Toeplitz
//! remainder around a reversible diagonal.

mod change;
mod remainder;
mod transport;

pub use change::ChangeOfVariables;
pub use remainder::{
    band_sum, conjugation_defect, kam_step, reduce, solve_remainder_homological, synthetic_remainder, Homological,
    KamSpec, ReductionState,
};
pub use transport::{straighten_transport, straightening_defect, TransportOutcome, TransportProblem};

use crate::cantor::fit_exponent;
use crate::error::{Error, Result};
use serde::Serialize;

fn glue(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Even C^∞ cut-off: 0 on |x| ≤ 1/3, 1 on |x| ≥ 1/2.
pub fn smooth_cutoff(x: f64) -> f64 {
    let s = (x.abs() - 1.0 / 3.0) * 6.0;
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let a = glue(s);
    a / (a + glue(1.0 - s))
}

/// Golden-mean based frequency vectors for one and two time dimensions.
pub fn default_frequency(d: usize) -> Result<Vec<f64>> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    match d {
        1 => Ok(vec![g / 3.0]),
        2 => Ok(vec![0.6 * g, 0.6]),
        _ => Err(Error::invalid(format!("no default frequency for {d} time dimensions"))),
    }
}

/// N_m = ⌊N₀^{(3/2)^m}⌋.
pub fn truncation_schedule(n0: f64, m: usize) -> i64 {
    let e = 1.5f64.powi(m as i32);
    let v = n0.powf(e);
    if v >= i64::MAX as f64 {
        i64::MAX
    } else {
        v.floor() as i64
    }
}

/// A lattice mode whose divisor fell inside the cut-off region.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutMode {
    pub l: Vec<i64>,
    pub j: i64,
    /// column mode for operator symbols
    pub j0: Option<i64>,
    pub divisor: f64,
    pub chi: f64,
}

/// One row of a reduction history.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub truncation: i64,
    pub delta_s0: f64,
    pub delta_sh: f64,
    pub cut_fraction: f64,
    /// transport speed V_m (1/2 throughout a pure remainder run)
    pub speed: f64,
}

/// Slope of log δ_{m+1} against log δ_m over a history of norms.
pub fn superlinear_slope(deltas: &[f64]) -> Option<f64> {
    if deltas.len() < 3 || deltas.iter().any(|d| !(*d > 0.0)) {
        return None;
    }
    Some(fit_exponent(&deltas[..deltas.len() - 1], &deltas[1..]))
}

/// Sobolev indices (s₀, s_h) used for the norm histories.
pub fn default_indices(d: usize) -> (f64, f64) {
    let s0 = 0.5 * d as f64 + 1.0;
    (s0, s0 + 2.0)
}
