//! Sparse polynomials in b with exact integer coefficients.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Σ c_n bⁿ, stored as sorted (n, c_n) pairs with no zero coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IntPoly {
    terms: Vec<(u32, i128)>,
}

/// n(n−1)…(n−q+1)
pub fn falling_factorial(n: u32, q: u32) -> i128 {
    if q > n {
        return 0;
    }
    (0..q).fold(1i128, |acc, k| acc * (n - k) as i128)
}

impl IntPoly {
    pub fn zero() -> Self {
        IntPoly { terms: Vec::new() }
    }

    pub fn constant(c: i128) -> Self {
        IntPoly::from_terms([(0, c)])
    }

    pub fn monomial(n: u32, c: i128) -> Self {
        IntPoly::from_terms([(n, c)])
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (u32, i128)>) -> Self {
        let mut acc: BTreeMap<u32, i128> = BTreeMap::new();
        for (n, c) in terms {
            *acc.entry(n).or_insert(0) += c;
        }
        IntPoly { terms: acc.into_iter().filter(|(_, c)| *c != 0).collect() }
    }

    pub fn terms(&self) -> &[(u32, i128)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.last().map(|t| t.0)
    }

    pub fn coefficient(&self, n: u32) -> i128 {
        self.terms.iter().find(|t| t.0 == n).map_or(0, |t| t.1)
    }

    pub fn add(&self, other: &IntPoly) -> IntPoly {
        IntPoly::from_terms(self.terms.iter().chain(other.terms.iter()).copied())
    }

    pub fn sub(&self, other: &IntPoly) -> IntPoly {
        self.add(&other.scale(-1))
    }

    pub fn scale(&self, k: i128) -> IntPoly {
        IntPoly::from_terms(self.terms.iter().map(|&(n, c)| (n, c * k)))
    }

    /// q-th derivative, exact.
    pub fn derivative(&self, q: u32) -> IntPoly {
        IntPoly::from_terms(
            self.terms
                .iter()
                .filter(|(n, _)| *n >= q)
                .map(|&(n, c)| (n - q, c * falling_factorial(n, q))),
        )
    }

    pub fn eval(&self, b: f64) -> f64 {
        self.terms.iter().map(|&(n, c)| c as f64 * b.powi(n as i32)).sum()
    }

    /// p^{(q)}(b) without forming the derivative polynomial.
    pub fn eval_derivative(&self, b: f64, q: u32) -> f64 {
        self.terms
            .iter()
            .filter(|(n, _)| *n >= q)
            .map(|&(n, c)| (c * falling_factorial(n, q)) as f64 * b.powi((n - q) as i32))
            .sum()
    }

    /// sup_{0≤b≤b_max} |p^{(q)}(b)| bounded termwise.
    pub fn derivative_bound(&self, b_max: f64, q: u32) -> f64 {
        self.terms
            .iter()
            .filter(|(n, _)| *n >= q)
            .map(|&(n, c)| (c * falling_factorial(n, q)).unsigned_abs() as f64 * b_max.powi((n - q) as i32))
            .sum()
    }

    pub fn eval_rational(&self, b: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for &(n, c) in &self.terms {
            let mut p = BigRational::one();
            for _ in 0..n {
                p *= b;
            }
            acc += p * BigRational::from_integer(BigInt::from(c));
        }
        acc
    }
}

/// Exact rank of the matrix whose columns are the coefficient vectors of `columns`.
pub fn coefficient_rank(columns: &[IntPoly]) -> usize {
    let mut exps: Vec<u32> = columns.iter().flat_map(|p| p.terms.iter().map(|t| t.0)).collect();
    exps.sort_unstable();
    exps.dedup();
    let mut rows: Vec<Vec<BigRational>> = exps
        .iter()
        .map(|&n| {
            columns
                .iter()
                .map(|p| BigRational::from_integer(BigInt::from(p.coefficient(n))))
                .collect()
        })
        .collect();
    let ncol = columns.len();
    let mut rank = 0;
    for col in 0..ncol {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let head = rows[rank].clone();
        for r in (rank + 1)..rows.len() {
            if rows[r][col].is_zero() {
                continue;
            }
            let f = &rows[r][col] / &head[col];
            for c in col..ncol {
                let d = &f * &head[c];
                rows[r][c] -= d;
            }
        }
        rank += 1;
    }
    rank
}
