//! Diophantine resonance sets in the parameter b and their Lebesgue measure.
//!
//! Every resonance function is a polynomial in b, so each excluded set is the exact sublevel
//! set {|f| ≤ α} computed by root isolation. Sets are sorted interval lists, which makes the
//! total a union measure and nesting across γ a direct inclusion check.

mod russmann;
mod sublevel;

pub use russmann::{certified_beta, russmann_bound};
pub use sublevel::{sublevel_measure, sublevel_set, IntervalSet, PolyFn, SublevelSet, GRID_LEVELS, ROOT_TOL};

use crate::error::{Error, Result};
use crate::spectral::bracket;
use crate::spectrum::{doubled_omega, lattice, FrequencySystem, IntPoly};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ResonanceKind {
    /// ω·l + jV with ω = −ω_Eq, V = 1/2; height γ^υ⟨j⟩/⟨l⟩^τ₁
    #[serde(rename = "transport")]
    Transport,
    /// ω_Eq·l + Ω_j; height γ⟨j⟩/⟨l⟩^τ₁
    #[serde(rename = "first-order-melnikov")]
    FirstOrder,
    /// ω_Eq·l + Ω_j − Ω_j₀; height 2γ⟨j−j₀⟩/⟨l⟩^τ₂
    #[serde(rename = "second-order-melnikov")]
    SecondOrder,
}

impl ResonanceKind {
    pub fn label(&self) -> &'static str {
        match self {
            ResonanceKind::Transport => "transport",
            ResonanceKind::FirstOrder => "first-order-melnikov",
            ResonanceKind::SecondOrder => "second-order-melnikov",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "transport" => Ok(ResonanceKind::Transport),
            "first-order-melnikov" | "first-order" => Ok(ResonanceKind::FirstOrder),
            "second-order-melnikov" | "second-order" => Ok(ResonanceKind::SecondOrder),
            _ => Err(Error::invalid(format!("unknown resonance kind {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiophantineSpec {
    pub kind: ResonanceKind,
    pub gamma: f64,
    pub upsilon: f64,
    pub tau1: f64,
    pub tau2: f64,
    /// bound on |l|₁
    pub lmax: i64,
    /// bound on |j| and |j₀|
    pub jmax: i64,
    /// second-order pairs with min(|j|,|j₀|) > c₂γ^{−υ}⟨l⟩^τ₁ are left to the transport sets
    pub c2: f64,
    /// constant added to every tangential frequency
    pub frequency_offset: f64,
    /// constant added to the transport speed 1/2
    pub speed_offset: f64,
}

impl DiophantineSpec {
    /// Defaults for d tangential sites and transversality order q₀: γ = 1e-3, υ = 1/(q₀+3),
    /// τ₁ = dq₀ + 1, τ₂ = τ₁ + dq₀ + 1, Lmax = 20, Jmax = 50.
    pub fn new(kind: ResonanceKind, d: usize, q0: u32) -> Self {
        let dq = (d as u32 * q0) as f64;
        DiophantineSpec {
            kind,
            gamma: 1e-3,
            upsilon: 1.0 / (q0 as f64 + 3.0),
            tau1: dq + 1.0,
            tau2: 2.0 * dq + 2.0,
            lmax: 20,
            jmax: 50,
            c2: 1.0,
            frequency_offset: 0.0,
            speed_offset: 0.0,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid(format!("γ = {} outside (0,1)", self.gamma)));
        }
        if !(self.upsilon > 0.0 && self.upsilon.is_finite()) {
            return Err(Error::invalid(format!("υ = {} must be positive", self.upsilon)));
        }
        if !(self.tau1 > d as f64 && self.tau2 > self.tau1 && self.tau2.is_finite()) {
            return Err(Error::invalid(format!(
                "need τ₂ > τ₁ > d, got τ₁ = {}, τ₂ = {}, d = {d}",
                self.tau1, self.tau2
            )));
        }
        if self.lmax < 1 || self.jmax < 1 {
            return Err(Error::invalid("index caps Lmax and Jmax must be positive"));
        }
        if !(self.c2 > 0.0 && self.c2.is_finite()) {
            return Err(Error::invalid(format!("c₂ = {} must be positive", self.c2)));
        }
        if !(self.frequency_offset.abs() < 0.1 && self.speed_offset.abs() < 0.1) {
            return Err(Error::invalid("offsets must be below 0.1 in size"));
        }
        Ok(())
    }

    pub fn tau(&self) -> f64 {
        match self.kind {
            ResonanceKind::SecondOrder => self.tau2,
            _ => self.tau1,
        }
    }

    /// Sublevel height for the index with lattice part l and mode index (or gap) j.
    pub fn threshold(&self, l: &[i64], j: i64) -> f64 {
        let bl = bracket(l, 0) as f64;
        let bj = bracket(&[], j) as f64;
        match self.kind {
            ResonanceKind::Transport => self.gamma.powf(self.upsilon) * bj / bl.powf(self.tau1),
            ResonanceKind::FirstOrder => self.gamma * bj / bl.powf(self.tau1),
            ResonanceKind::SecondOrder => 2.0 * self.gamma * bj / bl.powf(self.tau2),
        }
    }
}

/// γ_n = γ(1 + 2^{−n}).
pub fn gamma_schedule(gamma: f64, n: u32) -> f64 {
    gamma * (1.0 + 0.5f64.powi(n as i32))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Contribution {
    pub l: Vec<i64>,
    pub j: i64,
    pub j0: Option<i64>,
    pub threshold: f64,
    pub measure: f64,
    pub intervals: IntervalSet,
    /// certified lower bound of max_{k≤q₀}|f^{(k)}| on [b₀, b₁]
    pub beta: f64,
    /// +∞ when β could not be certified
    pub russmann_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureReport {
    pub kind: ResonanceKind,
    pub gamma: f64,
    pub tau: f64,
    pub q0: u32,
    pub interval: (f64, f64),
    /// measure of the union of all resonance sets
    pub excluded: f64,
    /// sum of the per-index measures (≥ `excluded`)
    pub contribution_sum: f64,
    pub excluded_set: IntervalSet,
    /// nonempty resonance sets in lattice order
    pub contributions: Vec<Contribution>,
    /// number of indices examined
    pub families: usize,
    /// ambiguous root-isolation cells, counted as excluded
    pub unresolved: usize,
    /// some index allowed by the cutoffs was dropped by Lmax/Jmax
    pub truncated: bool,
    /// estimate of the |l|₁ > Lmax remainder; None when the series diverges
    pub tail_bound: Option<f64>,
    pub russmann_violations: usize,
    pub uncertified: usize,
}

struct Index {
    j: i64,
    j0: Option<i64>,
    f: PolyFn,
    alpha: f64,
}

fn positive(l: &[i64]) -> bool {
    l.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}

/// Largest integer k ≥ 0 with k·denom ≤ numer, or None if every k qualifies.
fn cutoff(numer: f64, denom: f64) -> Option<i64> {
    (denom > 0.0).then(|| (numer / denom).floor() as i64)
}

struct Setup<'a> {
    sys: &'a FrequencySystem,
    spec: &'a DiophantineSpec,
    /// sup over [0, b₁] of |Ω_s| over the tangential sites, plus the frequency offset
    speed: f64,
}

impl Setup<'_> {
    fn poly(&self, doubled: &IntPoly, l: &[i64], speed_coef: i64) -> Result<PolyFn> {
        let shift = self.spec.frequency_offset * l.iter().sum::<i64>() as f64 + self.spec.speed_offset * speed_coef as f64;
        let f = PolyFn::from_int(doubled, 0.5).add_constant(shift);
        if f.is_zero() {
            return Err(Error::invariant("non-degenerate resonance", format!("f ≡ 0 at l = {l:?}")));
        }
        Ok(f)
    }

    fn normal(&self, j: i64) -> bool {
        j != 0 && !self.sys.is_tangential(j.abs())
    }

    /// Index family for one l and whether Jmax truncated it.
    fn indices(&self, l: &[i64]) -> Result<(Vec<Index>, bool)> {
        let spec = self.spec;
        let bl = bracket(l, 0) as f64;
        let base = self.sys.doubled_dot(l);
        let slack = 0.5 - spec.speed_offset.abs();
        let jmax = spec.jmax;
        let mut out = Vec::new();
        let truncated;
        match spec.kind {
            ResonanceKind::Transport => {
                // |f| ≥ |j|/2 − |δ_V||j| − speed·⟨l⟩
                let cut = cutoff(self.speed * bl, slack - spec.gamma.powf(spec.upsilon));
                truncated = cut.map_or(true, |c| c > jmax);
                let top = cut.map_or(jmax, |c| c.min(jmax));
                for j in 0..=top {
                    if j == 0 && !positive(l) {
                        continue;
                    }
                    let doubled = IntPoly::constant(j as i128).sub(&base);
                    out.push(Index { j, j0: None, f: self.poly(&doubled, l, j)?, alpha: spec.threshold(l, j) });
                }
            }
            ResonanceKind::FirstOrder => {
                // |Ω_j| ≥ (|j| − 1)/2
                let cut = cutoff(self.speed * bl + 0.5, slack - spec.gamma);
                truncated = cut.map_or(true, |c| c > jmax);
                let top = cut.map_or(jmax, |c| c.min(jmax));
                for j in (1..=top).filter(|&j| self.normal(j)) {
                    let doubled = base.add(&doubled_omega(j)?);
                    out.push(Index { j, j0: None, f: self.poly(&doubled, l, j)?, alpha: spec.threshold(l, j) });
                }
            }
            ResonanceKind::SecondOrder => {
                // |Ω_j − Ω_j₀| ≥ (|j − j₀| − 2)/2
                let gap_cut = cutoff(self.speed * bl + 1.0, slack - 2.0 * spec.gamma);
                let min_cut = (spec.c2 * spec.gamma.powf(-spec.upsilon) * bl.powf(spec.tau1)).floor();
                let min_top = if min_cut >= jmax as f64 { jmax } else { min_cut as i64 };
                truncated = gap_cut.map_or(true, |g| min_top.max(1) + g > jmax) || min_cut > jmax as f64;
                let gap_top = gap_cut.unwrap_or(i64::MAX);
                // representatives of (l, j, j₀) ~ (−l, −j, −j₀) ~ (−l, j₀, j): j ≥ |j₀|
                for m in (1..=min_top).filter(|&m| self.normal(m)) {
                    for j0 in [m, -m] {
                        for j in (m..=jmax).filter(|&j| self.normal(j)) {
                            let gap = j - j0;
                            if gap > gap_top {
                                break;
                            }
                            if gap == 0 && !positive(l) {
                                continue;
                            }
                            let doubled = base.add(&doubled_omega(j)?).sub(&doubled_omega(j0)?);
                            out.push(Index {
                                j,
                                j0: Some(j0),
                                f: self.poly(&doubled, l, gap)?,
                                alpha: spec.threshold(l, gap),
                            });
                        }
                    }
                }
            }
        }
        Ok((out, truncated))
    }
}

struct Shell {
    contributions: Vec<Contribution>,
    families: usize,
    unresolved: usize,
    truncated: bool,
}

/// Number of l ∈ ℤ^d with |l|₁ = n ≥ 1.
fn shell_size(d: usize, n: u64) -> f64 {
    let binom = |a: u64, b: u64| -> f64 {
        if b > a {
            return 0.0;
        }
        (0..b).map(|i| (a - i) as f64 / (i + 1) as f64).product()
    };
    (1..=d as u64).map(|k| 2f64.powi(k as i32) * binom(d as u64, k) * binom(n - 1, k - 1)).sum()
}

/// Σ_{|l|₁ > lmax} ⟨l⟩^{−p}, or None when it diverges.
fn lattice_tail(d: usize, lmax: i64, p: f64) -> Option<f64> {
    if p <= d as f64 {
        return None;
    }
    let end: u64 = 100_000;
    let mut s: f64 = (lmax as u64 + 1..=end).map(|n| shell_size(d, n) * (n as f64).powf(-p)).sum();
    // shell_size(d, n) ≤ 2^d n^{d−1}
    s += 2f64.powi(d as i32) * (end as f64).powf(d as f64 - p) / (p - d as f64);
    Some(s)
}

/// Measure of the union of the resonance sets selected by `spec`, with per-index
/// contributions, Rüssmann certification and a tail estimate.
pub fn excluded_measure(sys: &FrequencySystem, spec: &DiophantineSpec) -> Result<MeasureReport> {
    spec.validate(sys.dim())?;
    let interval = sys.interval();
    let q0 = sys.q0();
    let (_, b1) = interval;
    let speed = sys
        .doubled_frequencies()
        .iter()
        .map(|p| 0.5 * p.terms().iter().map(|&(n, c)| (c as f64).abs() * b1.powi(n as i32)).sum::<f64>())
        .fold(0.0, f64::max)
        + spec.frequency_offset.abs();
    let setup = Setup { sys, spec, speed };
    let lattice = lattice(sys.dim(), spec.lmax);
    let shells: Vec<Result<Shell>> = lattice
        .par_iter()
        .map(|l| {
            let (indices, truncated) = setup.indices(l)?;
            let mut shell = Shell { contributions: Vec::new(), families: indices.len(), unresolved: 0, truncated };
            for idx in indices {
                let s = sublevel_set(&idx.f, idx.alpha, interval)?;
                shell.unresolved += s.unresolved;
                if s.set.is_empty() {
                    continue;
                }
                let beta = certified_beta(&idx.f, q0, interval);
                let bound =
                    if beta > 0.0 { russmann_bound(&idx.f, idx.alpha, q0, beta, interval)? } else { f64::INFINITY };
                shell.contributions.push(Contribution {
                    l: l.clone(),
                    j: idx.j,
                    j0: idx.j0,
                    threshold: idx.alpha,
                    measure: s.set.measure(),
                    intervals: s.set,
                    beta,
                    russmann_bound: bound,
                });
            }
            Ok(shell)
        })
        .collect();

    let mut contributions = Vec::new();
    let (mut families, mut unresolved, mut truncated) = (0, 0, false);
    for shell in shells {
        let shell = shell?;
        families += shell.families;
        unresolved += shell.unresolved;
        truncated |= shell.truncated;
        contributions.extend(shell.contributions);
    }
    let excluded_set =
        IntervalSet::from_intervals(contributions.iter().flat_map(|c| c.intervals.intervals().iter().copied()));
    let contribution_sum = contributions.iter().map(|c| c.measure).sum();
    // enclosure endpoints overshoot by at most ROOT_TOL each
    let russmann_violations = contributions
        .iter()
        .filter(|c| c.measure > c.russmann_bound + 2.0 * ROOT_TOL * c.intervals.intervals().len() as f64)
        .count();
    let uncertified = contributions.iter().filter(|c| !c.russmann_bound.is_finite()).count();

    // per-index bounds scale like K⟨l⟩^{−τ/q₀}⟨j⟩^{1/q₀}; at most `per_l` indices per l
    let tau = spec.tau();
    let inv = 1.0 / q0 as f64;
    let k = contributions
        .iter()
        .filter(|c| c.russmann_bound.is_finite())
        .map(|c| {
            let gap = c.j - c.j0.unwrap_or(0);
            c.russmann_bound * (bracket(&c.l, 0) as f64).powf(tau * inv) / (bracket(&[], gap) as f64).powf(inv)
        })
        .fold(0.0, f64::max);
    let jm = spec.jmax as f64;
    let per_l = match spec.kind {
        ResonanceKind::Transport => jm + 1.0,
        ResonanceKind::FirstOrder => jm,
        ResonanceKind::SecondOrder => jm * jm,
    };
    let tail_bound = lattice_tail(sys.dim(), spec.lmax, tau * inv).map(|s| k * per_l * (2.0 * jm).powf(inv) * s);

    let excluded = excluded_set.measure();
    Ok(MeasureReport {
        kind: spec.kind,
        gamma: spec.gamma,
        tau,
        q0,
        interval,
        excluded,
        contribution_sum,
        excluded_set,
        contributions,
        families,
        unresolved,
        truncated,
        tail_bound,
        russmann_violations,
        uncertified,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CantorSet {
    pub gamma: f64,
    pub tau: f64,
    pub interval: (f64, f64),
    pub surviving: IntervalSet,
    pub measure: f64,
    pub excluded: f64,
}

/// Measure of {b : |ω_Eq(b)·l + Ω_j(b)| > γ⟨j⟩/⟨l⟩^τ for all indices within the caps}.
pub fn linear_cantor_measure(sys: &FrequencySystem, gamma: f64, tau: f64, lmax: i64) -> Result<CantorSet> {
    let (b0, b1) = sys.interval();
    if gamma == 0.0 {
        return Ok(CantorSet {
            gamma,
            tau,
            interval: (b0, b1),
            surviving: IntervalSet::from_intervals([(b0, b1)]),
            measure: b1 - b0,
            excluded: 0.0,
        });
    }
    let spec = DiophantineSpec {
        gamma,
        tau1: tau,
        tau2: tau + 1.0,
        lmax,
        ..DiophantineSpec::new(ResonanceKind::FirstOrder, sys.dim(), sys.q0())
    };
    let report = excluded_measure(sys, &spec)?;
    let surviving = report.excluded_set.complement_in(b0, b1);
    Ok(CantorSet { gamma, tau, interval: (b0, b1), measure: surviving.measure(), excluded: report.excluded, surviving })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub gamma: f64,
    pub excluded: f64,
    pub contribution_sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaSweep {
    pub kind: ResonanceKind,
    /// ascending in γ
    pub points: Vec<SweepPoint>,
    /// least-squares slope of log(excluded) against log γ
    pub fitted_exponent: f64,
    /// excluded measure strictly increases with γ
    pub strictly_monotone: bool,
    /// excluded set at each γ contains the one at the next smaller γ
    pub nested: bool,
}

/// Least-squares slope of log y against log x.
pub fn fit_exponent(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// Excluded measure over a range of γ with the other parameters of `spec` fixed.
pub fn gamma_sweep(sys: &FrequencySystem, spec: &DiophantineSpec, gammas: &[f64]) -> Result<GammaSweep> {
    if gammas.len() < 2 {
        return Err(Error::invalid("a γ sweep needs at least two values"));
    }
    let mut gs = gammas.to_vec();
    gs.sort_by(f64::total_cmp);
    let mut reports = Vec::new();
    for &gamma in &gs {
        reports.push(excluded_measure(sys, &DiophantineSpec { gamma, ..spec.clone() })?);
    }
    let points: Vec<SweepPoint> = reports
        .iter()
        .map(|r| SweepPoint { gamma: r.gamma, excluded: r.excluded, contribution_sum: r.contribution_sum })
        .collect();
    let strictly_monotone = points.windows(2).all(|w| w[0].excluded < w[1].excluded);
    let nested = reports.windows(2).all(|w| w[1].excluded_set.contains_set(&w[0].excluded_set, ROOT_TOL));
    let positive: Vec<&SweepPoint> = points.iter().filter(|p| p.excluded > 0.0).collect();
    let fitted_exponent = if positive.len() >= 2 {
        let xs: Vec<f64> = positive.iter().map(|p| p.gamma).collect();
        let ys: Vec<f64> = positive.iter().map(|p| p.excluded).collect();
        fit_exponent(&xs, &ys)
    } else {
        f64::NAN
    };
    Ok(GammaSweep { kind: spec.kind, points, fitted_exponent, strictly_monotone, nested })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_site() -> FrequencySystem {
        FrequencySystem::new(&[1], 0.1, 0.9).unwrap()
    }

    fn transport_spec(gamma: f64, lmax: i64) -> DiophantineSpec {
        DiophantineSpec {
            gamma,
            upsilon: 1.0,
            tau1: 2.0,
            tau2: 3.0,
            lmax,
            ..DiophantineSpec::new(ResonanceKind::Transport, 1, 4)
        }
    }

    /// |{b ∈ [0.1, 0.9] : |j − l b²|/2 ≤ α}| in closed form.
    fn closed_form(l: i64, j: i64, alpha: f64) -> f64 {
        if l == 0 {
            return if (j as f64).abs() <= 2.0 * alpha { 0.8 } else { 0.0 };
        }
        let (mut lo, mut hi) = ((j as f64 - 2.0 * alpha) / l as f64, (j as f64 + 2.0 * alpha) / l as f64);
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
        }
        let (a, c) = (lo.max(0.0).sqrt().max(0.1), hi.max(0.0).sqrt().min(0.9));
        (c - a).max(0.0)
    }

    #[test]
    fn single_site_transport_sets() {
        let sys = single_site();
        let rep = excluded_measure(&sys, &transport_spec(1e-3, 10)).unwrap();
        assert!(!rep.contributions.is_empty());
        assert!(rep.excluded > 0.0 && rep.excluded < 0.05 * 0.8, "{}", rep.excluded);
        assert!(rep.excluded <= rep.contribution_sum + 1e-15);
        assert_eq!(rep.unresolved, 0);
        for c in &rep.contributions {
            assert!(!(c.l.iter().all(|&x| x == 0) && c.j == 0));
            assert!(c.measure > 0.0);
            // f = −Ω₁(b)·l + j/2 = (j − l b²)/2
            let exact = closed_form(c.l[0], c.j, c.threshold);
            assert!((c.measure - exact).abs() <= 2.0 * ROOT_TOL + 1e-15, "{c:?} vs {exact}");
        }
    }

    #[test]
    fn transport_measure_decreases_with_gamma() {
        let sys = single_site();
        let sweep = gamma_sweep(&sys, &transport_spec(1e-3, 10), &[1e-2, 1e-3, 1e-4, 1e-5]).unwrap();
        assert!(sweep.strictly_monotone && sweep.nested, "{sweep:?}");
        assert!(sweep.fitted_exponent > 0.0);
    }

    #[test]
    fn zero_index_is_excluded() {
        let sys = FrequencySystem::new(&[1, 2], 0.1, 0.9).unwrap();
        let spec = DiophantineSpec { lmax: 2, ..DiophantineSpec::new(ResonanceKind::Transport, 2, 6) };
        let setup = Setup { sys: &sys, spec: &spec, speed: 1.0 };
        let (idx, _) = setup.indices(&[0, 0]).unwrap();
        assert!(idx.iter().all(|i| i.j != 0));
        let (idx, _) = setup.indices(&[0, -1]).unwrap();
        assert!(idx.iter().all(|i| i.j != 0));
        assert!(setup.indices(&[0, 1]).unwrap().0.iter().any(|i| i.j == 0));
    }

    #[test]
    fn second_order_representatives_are_unique() {
        let sys = FrequencySystem::new(&[1, 2], 0.1, 0.9).unwrap();
        let spec = DiophantineSpec { jmax: 12, ..DiophantineSpec::new(ResonanceKind::SecondOrder, 2, 6) };
        let setup = Setup { sys: &sys, spec: &spec, speed: 0.83 };
        let mut seen = std::collections::HashSet::new();
        for l in lattice(2, 3) {
            for i in setup.indices(&l).unwrap().0 {
                let (j, j0) = (i.j, i.j0.unwrap());
                assert!(j >= j0.abs() && setup.normal(j) && setup.normal(j0));
                // the equivalent forms must not appear again
                let neg: Vec<i64> = l.iter().map(|x| -x).collect();
                assert!(!seen.contains(&(neg.clone(), j0, j)) || j == j0);
                assert!(!seen.contains(&(l.clone(), -j0, -j)) || j == -j0);
                seen.insert((l.clone(), j, j0));
            }
        }
    }

    #[test]
    fn cutoffs_drop_only_empty_sets() {
        // enumerate well past the cutoffs and check the extra indices never intersect
        let sys = FrequencySystem::new(&[1, 2], 0.1, 0.9).unwrap();
        for kind in [ResonanceKind::Transport, ResonanceKind::FirstOrder] {
            let spec = DiophantineSpec { lmax: 3, jmax: 50, upsilon: 1.0, ..DiophantineSpec::new(kind, 2, 6) };
            let setup = Setup { sys: &sys, spec: &spec, speed: 0.8281 };
            for l in lattice(2, 3) {
                let (idx, truncated) = setup.indices(&l).unwrap();
                assert!(!truncated);
                let top = idx.iter().map(|i| i.j).max().unwrap_or(0);
                for j in (top + 1).max(3)..top + 20 {
                    let f = match kind {
                        ResonanceKind::Transport => {
                            PolyFn::from_int(&IntPoly::constant(j as i128).sub(&sys.doubled_dot(&l)), 0.5)
                        }
                        _ => PolyFn::from_int(&sys.doubled_dot(&l).add(&doubled_omega(j).unwrap()), 0.5),
                    };
                    assert_eq!(sublevel_measure(&f, spec.threshold(&l, j), (0.1, 0.9)).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn russmann_certifies_every_contribution() {
        let sys = FrequencySystem::new(&[1, 2], 0.1, 0.9).unwrap();
        for kind in [ResonanceKind::Transport, ResonanceKind::FirstOrder, ResonanceKind::SecondOrder] {
            let spec = DiophantineSpec { lmax: 6, jmax: 20, ..DiophantineSpec::new(kind, 2, 6) };
            let rep = excluded_measure(&sys, &spec).unwrap();
            assert!(!rep.contributions.is_empty(), "{kind:?}");
            assert_eq!((rep.russmann_violations, rep.uncertified), (0, 0), "{kind:?}");
        }
    }

    #[test]
    fn linear_measure_limits() {
        let sys = FrequencySystem::new(&[1, 2], 0.1, 0.9).unwrap();
        let full = linear_cantor_measure(&sys, 0.0, 3.0, 10).unwrap();
        assert_eq!(full.measure, 0.8);
        let a = linear_cantor_measure(&sys, 1e-4, 3.0, 10).unwrap();
        let b = linear_cantor_measure(&sys, 1e-3, 3.0, 10).unwrap();
        assert!(a.measure >= b.measure && a.measure < 0.8);
        assert!(a.surviving.contains_set(&b.surviving, ROOT_TOL));
        assert!((a.measure + a.excluded - 0.8).abs() < 1e-14);
    }

    #[test]
    fn spec_validation() {
        let ok = DiophantineSpec::new(ResonanceKind::FirstOrder, 2, 6);
        assert!(ok.validate(2).is_ok());
        assert!(DiophantineSpec { gamma: 0.0, ..ok.clone() }.validate(2).is_err());
        assert!(DiophantineSpec { gamma: 1.0, ..ok.clone() }.validate(2).is_err());
        assert!(DiophantineSpec { tau1: 2.0, ..ok.clone() }.validate(2).is_err());
        assert!(DiophantineSpec { tau2: 12.5, ..ok.clone() }.validate(2).is_err());
        assert!(DiophantineSpec { lmax: 0, ..ok }.validate(2).is_err());
    }

    #[test]
    fn tail_series() {
        assert!(lattice_tail(2, 20, 1.5).is_none());
        let s = lattice_tail(1, 10, 3.0).unwrap();
        let direct: f64 = (11..2_000_000).map(|n| 2.0 / (n as f64).powi(3)).sum();
        assert!((s - direct).abs() < 1e-9 * direct.max(1.0) + 1e-10);
        assert_eq!(shell_size(2, 5), 20.0);
        assert_eq!(shell_size(3, 2), 18.0);
    }

    #[test]
    fn schedule() {
        assert_eq!(gamma_schedule(1e-3, 0), 2e-3);
        assert!((gamma_schedule(1e-3, 10) - 1e-3).abs() < 1e-6);
    }

    #[test]
    fn exponent_fit() {
        let xs = [1e-4, 1e-3, 1e-2];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.7)).collect();
        assert!((fit_exponent(&xs, &ys) - 0.7).abs() < 1e-12);
    }
}
