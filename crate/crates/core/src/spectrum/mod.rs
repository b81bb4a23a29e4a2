//! Equilibrium frequencies Ω_j(b) = (j − 1 + b^{2j})/2 and their structural checks.

mod poly;
mod transversality;

pub use poly::{coefficient_rank, falling_factorial, IntPoly};
pub(crate) use transversality::lattice;
pub use transversality::{
    perturbed_transversality, refine_scan, transversality_scan, CaseMinimum, PerturbedReport, ResonanceCase,
    ScanConfig, TransversalityReport, Witness,
};

use crate::error::{Error, Result};
use serde::Serialize;

/// 2Ω_j as an integer polynomial in b; odd in j.
pub fn doubled_omega(j: i64) -> Result<IntPoly> {
    if j == 0 {
        return Err(Error::invalid("Ω_j is undefined for j = 0"));
    }
    let a = j.unsigned_abs();
    let p = IntPoly::from_terms([(0, a as i128 - 1), (2 * a as u32, 1)]);
    Ok(if j > 0 { p } else { p.scale(-1) })
}

fn check_b(b: f64) -> Result<()> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::invalid(format!("b = {b} outside (0,1)")));
    }
    Ok(())
}

pub fn omega(b: f64, j: i64) -> Result<f64> {
    omega_derivative(b, j, 0)
}

/// ∂_b^q Ω_j(b) by the monomial rule.
pub fn omega_derivative(b: f64, j: i64, q: u32) -> Result<f64> {
    check_b(b)?;
    Ok(0.5 * doubled_omega(j)?.eval_derivative(b, q))
}

/// Tangential sites, parameter interval and the derivative order q₀ = 2j_d + 2.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrequencySystem {
    sites: Vec<i64>,
    b0: f64,
    b1: f64,
    q0: u32,
    #[serde(skip)]
    tangential: Vec<IntPoly>,
}

impl FrequencySystem {
    pub fn new(sites: &[i64], b0: f64, b1: f64) -> Result<Self> {
        let tangential = sites.iter().map(|&j| doubled_omega(j)).collect::<Result<Vec<_>>>()?;
        Self::with_frequencies(sites, b0, b1, tangential)
    }

    /// Same index bookkeeping with an arbitrary doubled frequency vector; used for controls.
    pub fn with_frequencies(sites: &[i64], b0: f64, b1: f64, doubled: Vec<IntPoly>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::invalid("tangential set is empty"));
        }
        if sites.windows(2).any(|w| w[0] >= w[1]) || sites[0] < 1 {
            return Err(Error::invalid("tangential sites must be strictly increasing positive integers"));
        }
        if !(0.0 < b0 && b0 < b1 && b1 < 1.0) {
            return Err(Error::invalid(format!("interval [{b0}, {b1}] not inside (0,1)")));
        }
        if doubled.len() != sites.len() {
            return Err(Error::invalid("one frequency per tangential site required"));
        }
        let q0 = 2 * *sites.last().unwrap() as u32 + 2;
        Ok(FrequencySystem { sites: sites.to_vec(), b0, b1, q0, tangential: doubled })
    }

    pub fn sites(&self) -> &[i64] {
        &self.sites
    }

    pub fn dim(&self) -> usize {
        self.sites.len()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.b0, self.b1)
    }

    pub fn q0(&self) -> u32 {
        self.q0
    }

    pub fn is_tangential(&self, j: i64) -> bool {
        self.sites.contains(&j.abs())
    }

    pub fn doubled_frequencies(&self) -> &[IntPoly] {
        &self.tangential
    }

    /// ω_Eq(b).
    pub fn frequency_vector(&self, b: f64) -> Vec<f64> {
        self.tangential.iter().map(|p| 0.5 * p.eval(b)).collect()
    }

    /// 2 ω_Eq·l as a polynomial.
    pub fn doubled_dot(&self, l: &[i64]) -> IntPoly {
        self.tangential
            .iter()
            .zip(l)
            .fold(IntPoly::zero(), |acc, (p, &lk)| acc.add(&p.scale(lk as i128)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub b: f64,
    pub jmax: i64,
    /// min_j (Ω_{j+1}/(j+1) − Ω_j/j)
    pub min_gap: f64,
    pub argmin_j: i64,
    pub strictly_increasing: bool,
}

/// Checks that j ↦ Ω_j(b)/j increases on 1 ≤ j ≤ jmax.
pub fn check_monotonicity(b: f64, jmax: i64) -> Result<MonotonicityReport> {
    check_b(b)?;
    if jmax < 2 {
        return Err(Error::invalid("jmax must be at least 2"));
    }
    let ratio = |j: i64| omega(b, j).map(|w| w / j as f64);
    let mut min_gap = f64::INFINITY;
    let mut argmin_j = 1;
    for j in 1..jmax {
        let gap = ratio(j + 1)? - ratio(j)?;
        if gap < min_gap {
            min_gap = gap;
            argmin_j = j;
        }
    }
    Ok(MonotonicityReport { b, jmax, min_gap, argmin_j, strictly_increasing: min_gap > 0.0 })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    /// min over grid and j of |Ω_j| / ((b₀²/2)|j|)
    pub single_ratio: f64,
    /// min over grid and j ≠ ±j' of |Ω_j ± Ω_j'| / ((b₀²/6)|j ± j'|)
    pub pair_ratio: f64,
    /// max over q ≤ q0, grid and pairs of |∂^q(Ω_j ± Ω_j')| / |j ± j'|
    pub derivative_constant: f64,
}

/// Scans the lower bounds on |Ω_j| and |Ω_j ± Ω_j'| and the uniform derivative bound over [b0,b1].
pub fn check_frequency_bounds(b0: f64, b1: f64, jmax: i64, q0: u32, grid: usize) -> Result<BoundsReport> {
    check_b(b0)?;
    check_b(b1)?;
    if b0 >= b1 || grid < 2 || jmax < 1 {
        return Err(Error::invalid("need b0 < b1, grid ≥ 2 and jmax ≥ 1"));
    }
    let bs: Vec<f64> = (0..grid).map(|i| b0 + (b1 - b0) * i as f64 / (grid - 1) as f64).collect();
    let polys: Vec<IntPoly> = (1..=jmax).map(doubled_omega).collect::<Result<_>>()?;
    let mut single_ratio = f64::INFINITY;
    for (idx, p) in polys.iter().enumerate() {
        let j = (idx + 1) as f64;
        for &b in &bs {
            single_ratio = single_ratio.min(0.5 * p.eval(b).abs() / (b0 * b0 / 2.0 * j));
        }
    }
    let mut pair_ratio = f64::INFINITY;
    let mut derivative_constant: f64 = 0.0;
    for (i, pi) in polys.iter().enumerate() {
        for (k, pk) in polys.iter().enumerate() {
            let (j, jp) = ((i + 1) as f64, (k + 1) as f64);
            for (sign, weight) in [(1i128, j + jp), (-1, (j - jp).abs())] {
                if weight == 0.0 {
                    continue;
                }
                let f = pi.add(&pk.scale(sign));
                for &b in &bs {
                    pair_ratio = pair_ratio.min(0.5 * f.eval(b).abs() / (b0 * b0 / 6.0 * weight));
                    for q in 0..=q0 {
                        derivative_constant = derivative_constant.max(0.5 * f.eval_derivative(b, q).abs() / weight);
                    }
                }
            }
        }
    }
    Ok(BoundsReport { single_ratio, pair_ratio, derivative_constant })
}

/// Exact full-column-rank test of the monomial coefficient matrix of the given functions.
pub fn is_nondegenerate(columns: &[IntPoly]) -> bool {
    coefficient_rank(columns) == columns.len()
}

/// Non-degeneracy of both ω_Eq and (ω_Eq, 1).
pub fn nondegeneracy_test(sys: &FrequencySystem) -> bool {
    let mut cols = sys.doubled_frequencies().to_vec();
    if !is_nondegenerate(&cols) {
        return false;
    }
    cols.push(IntPoly::constant(1));
    is_nondegenerate(&cols)
}
