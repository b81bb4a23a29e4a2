//! Constructive Rüssmann-type sublevel bound.
//!
//! Suppose max_{k≤q₀} |f^{(k)}| ≥ β on [a, b] and M bounds |f^{(k+1)}| there for k ≤ q₀.
//! Cut [a, b] into N ≤ (2M(b−a) + β)/β pieces of length β/(2M). On each piece a single order
//! k keeps |f^{(k)}| ≥ β/2 throughout. For k = 0 the piece misses {|f| ≤ α} as soon as
//! 2α < β. For k ≥ 1 Pólya's lemma gives a sublevel measure of at most
//! 4(k!·2α/(2^{2k−1}β))^{1/k} ≤ 2k(2α/β)^{1/k} ≤ 2q₀(2α/β)^{1/q₀}. Summing,
//!
//!   |{|f| ≤ α}| ≤ 2q₀ (2α)^{1/q₀} (2M(b−a) + β) / β^{1+1/q₀}.
//!
//! When 2α ≥ β the bound is replaced by max(bound, b − a).

use super::sublevel::PolyFn;
use crate::error::{Error, Result};

/// C·α^{1/q₀}/β^{1+1/q₀} with the constant from the construction above.
pub fn russmann_bound(f: &PolyFn, alpha: f64, q0: u32, beta: f64, interval: (f64, f64)) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::invalid(format!("transversality constant β = {beta} must be positive")));
    }
    if q0 == 0 {
        return Err(Error::invalid("q₀ must be at least 1"));
    }
    if !(alpha >= 0.0) {
        return Err(Error::invalid(format!("sublevel height {alpha} must be ≥ 0")));
    }
    let (a, c) = interval;
    let len = c - a;
    let m = (1..=q0 + 1).map(|k| f.derivative_sup(a, c, k)).fold(0.0, f64::max);
    let inv = 1.0 / q0 as f64;
    let bound = 2.0 * q0 as f64 * (2.0 * alpha).powf(inv) * (2.0 * m * len + beta) / beta.powf(1.0 + inv);
    Ok(if 2.0 * alpha >= beta { bound.max(len) } else { bound })
}

fn cell_bound(f: &PolyFn, q0: u32, lo: f64, hi: f64) -> (f64, f64) {
    let h = 0.5 * (hi - lo);
    let mid = lo + h;
    let mut lower = f64::NEG_INFINITY;
    let mut top = 0.0f64;
    for q in 0..=q0 {
        let v = f.derivative(mid, q).abs();
        top = top.max(v);
        lower = lower.max(v - h * f.derivative_sup(lo, hi, q + 1));
    }
    (lower, top)
}

fn descend(f: &PolyFn, q0: u32, lo: f64, hi: f64, depth: u32) -> f64 {
    let (lower, top) = cell_bound(f, q0, lo, hi);
    if lower >= 0.5 * top || depth >= 48 {
        return lower.max(0.0);
    }
    let mid = 0.5 * (lo + hi);
    descend(f, q0, lo, mid, depth + 1).min(descend(f, q0, mid, hi, depth + 1))
}

/// Certified lower bound of min_{[a,b]} max_{k≤q₀} |f^{(k)}| by adaptive subdivision.
/// Zero means no positive bound was found.
pub fn certified_beta(f: &PolyFn, q0: u32, interval: (f64, f64)) -> f64 {
    descend(f, q0, interval.0, interval.1, 0)
}
