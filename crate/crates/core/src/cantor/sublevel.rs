//! Real polynomials, interval lists and exact sublevel sets {x : |f(x)| ≤ α}.

use crate::error::{Error, Result};
use crate::spectrum::IntPoly;
use serde::Serialize;

/// Dyadic depth below which cells are only accepted when proven in, out, or monotone.
pub const GRID_LEVELS: u32 = 14;
/// Guaranteed bracket width for each root of f ∓ α (brackets are refined to adjacent floats).
pub const ROOT_TOL: f64 = 1e-12;
/// Cells narrower than this that are still ambiguous are reported as unresolved.
const FLOOR: f64 = 1e-13;

fn falling(n: u32, q: u32) -> f64 {
    (0..q).map(|i| (n - i) as f64).product()
}

/// Polynomial with real coefficients, stored as sorted (power, coefficient) pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PolyFn {
    terms: Vec<(u32, f64)>,
}

impl PolyFn {
    pub fn new(terms: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut v: Vec<(u32, f64)> = terms.into_iter().collect();
        v.sort_by_key(|t| t.0);
        let mut out: Vec<(u32, f64)> = Vec::with_capacity(v.len());
        for (n, c) in v {
            match out.last_mut() {
                Some(last) if last.0 == n => last.1 += c,
                _ => out.push((n, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        PolyFn { terms: out }
    }

    /// `scale`·p for an integer polynomial p.
    pub fn from_int(p: &IntPoly, scale: f64) -> Self {
        PolyFn::new(p.terms().iter().map(|&(n, c)| (n, scale * c as f64)))
    }

    pub fn terms(&self) -> &[(u32, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.last().map(|t| t.0)
    }

    pub fn add_constant(&self, c: f64) -> Self {
        PolyFn::new(self.terms.iter().copied().chain(std::iter::once((0, c))))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    /// f^{(q)}(x).
    pub fn derivative(&self, x: f64, q: u32) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.0 >= q)
            .map(|&(n, c)| c * falling(n, q) * x.powi((n - q) as i32))
            .sum()
    }

    /// Termwise upper bound of sup_{[a, c]} |f^{(q)}|.
    pub fn derivative_sup(&self, a: f64, c: f64, q: u32) -> f64 {
        let r = a.abs().max(c.abs());
        self.terms
            .iter()
            .filter(|t| t.0 >= q)
            .map(|&(n, c)| c.abs() * falling(n, q) * r.powi((n - q) as i32))
            .sum()
    }
}

/// Sorted, pairwise disjoint closed intervals.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet::default()
    }

    /// Sorts and merges overlapping or touching intervals; drops reversed ones.
    pub fn from_intervals(items: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut v: Vec<(f64, f64)> = items.into_iter().filter(|p| p.0 <= p.1).collect();
        v.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (a, c) in v {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(c),
                _ => out.push((a, c)),
            }
        }
        IntervalSet { intervals: out }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|p| p.1 - p.0).sum()
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        IntervalSet::from_intervals(self.intervals.iter().chain(other.intervals.iter()).copied())
    }

    /// [a, c] minus the set.
    pub fn complement_in(&self, a: f64, c: f64) -> IntervalSet {
        let mut out = Vec::new();
        let mut left = a;
        for &(x, y) in &self.intervals {
            if y < a || x > c {
                continue;
            }
            if x > left {
                out.push((left, x));
            }
            left = left.max(y);
        }
        if left < c {
            out.push((left, c));
        }
        IntervalSet { intervals: out }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|p| p.0 <= x && x <= p.1)
    }

    /// Every interval of `other` lies inside one interval of `self` widened by `tol`.
    pub fn contains_set(&self, other: &IntervalSet, tol: f64) -> bool {
        other
            .intervals
            .iter()
            .all(|q| self.intervals.iter().any(|p| p.0 - tol <= q.0 && q.1 <= p.1 + tol))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SublevelSet {
    pub set: IntervalSet,
    /// ambiguous cells narrower than the floor, included in `set` as a whole
    pub unresolved: usize,
}

struct Walker<'a> {
    f: &'a PolyFn,
    alpha: f64,
    pieces: Vec<(f64, f64)>,
    unresolved: usize,
}

impl Walker<'_> {
    /// sup over |x − mid| ≤ h of |f^{(q)}(x) − f^{(q)}(mid)|, by a second-order Taylor bound.
    fn spread(&self, lo: f64, hi: f64, mid: f64, h: f64, q: u32) -> f64 {
        h * self.f.derivative(mid, q + 1).abs() + 0.5 * h * h * self.f.derivative_sup(lo, hi, q + 2)
    }

    fn visit(&mut self, lo: f64, hi: f64, level: u32) {
        let h = 0.5 * (hi - lo);
        let mid = lo + h;
        let v = self.f.eval(mid).abs();
        let spread = self.spread(lo, hi, mid, h, 0);
        if v - spread > self.alpha {
            return;
        }
        if v + spread <= self.alpha {
            self.pieces.push((lo, hi));
            return;
        }
        if level >= GRID_LEVELS {
            let d1 = self.f.derivative(mid, 1);
            if d1.abs() - self.spread(lo, hi, mid, h, 1) > 0.0 {
                self.monotone(lo, hi, d1.signum());
                return;
            }
            if hi - lo < FLOOR {
                self.pieces.push((lo, hi));
                self.unresolved += 1;
                return;
            }
        }
        self.visit(lo, mid, level + 1);
        self.visit(mid, hi, level + 1);
    }

    /// g = sign·f is increasing on [lo, hi]; {−α ≤ g ≤ α} is one interval.
    fn monotone(&mut self, lo: f64, hi: f64, sign: f64) {
        let g = |x: f64| sign * self.f.eval(x);
        let (glo, ghi) = (g(lo), g(hi));
        if ghi < -self.alpha || glo > self.alpha {
            return;
        }
        let left = if glo >= -self.alpha { lo } else { crossing(&g, lo, hi, -self.alpha).0 };
        let right = if ghi <= self.alpha { hi } else { crossing(&g, lo, hi, self.alpha).1 };
        self.pieces.push((left, right));
    }
}

/// Bracket [x, y] of adjacent floats with g(x) < level ≤ g(y), for g increasing.
fn crossing(g: &dyn Fn(f64) -> f64, mut x: f64, mut y: f64, level: f64) -> (f64, f64) {
    loop {
        let m = 0.5 * (x + y);
        if m <= x || m >= y {
            break;
        }
        if g(m) < level {
            x = m;
        } else {
            y = m;
        }
    }
    (x, y)
}

fn check_interval(interval: (f64, f64)) -> Result<()> {
    if !(interval.0.is_finite() && interval.1.is_finite() && interval.0 < interval.1) {
        return Err(Error::invalid(format!("bad interval [{}, {}]", interval.0, interval.1)));
    }
    Ok(())
}

/// Outer enclosure of {x ∈ interval : |f(x)| ≤ α}; each endpoint is the outer end of a bracket
/// of adjacent floats around a root of f ∓ α, so the measure is exact up to a few ulps per interval.
pub fn sublevel_set(f: &PolyFn, alpha: f64, interval: (f64, f64)) -> Result<SublevelSet> {
    check_interval(interval)?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("sublevel height {alpha} must be finite and ≥ 0")));
    }
    let mut walker = Walker { f, alpha, pieces: Vec::new(), unresolved: 0 };
    walker.visit(interval.0, interval.1, 0);
    Ok(SublevelSet { set: IntervalSet::from_intervals(walker.pieces), unresolved: walker.unresolved })
}

/// Lebesgue measure of {x ∈ interval : |f(x)| ≤ α}.
pub fn sublevel_measure(f: &PolyFn, alpha: f64, interval: (f64, f64)) -> Result<f64> {
    let s = sublevel_set(f, alpha, interval)?;
    if s.unresolved > 0 {
        return Err(Error::RootIsolation(format!(
            "{} cells below width {FLOOR:e} could not be resolved (|f| touches α)",
            s.unresolved
        )));
    }
    Ok(s.set.measure())
}
