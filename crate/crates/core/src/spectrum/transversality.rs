//! Grid measurement of min_b max_{q≤q₀} |∂_b^q f(b)| / ⟨l⟩ over the resonance families.
//!
//! Each family is scanned by branch and bound: on a b-interval with centre m and radius h,
//! max_q (|f^{(q)}(m)| − h·sup|f^{(q+1)}|) bounds the objective from below, so whole
//! intervals are discarded once they cannot beat the running minimum. The result equals the
//! exhaustive grid minimum.

use super::{doubled_omega, falling_factorial, FrequencySystem, IntPoly};
use crate::error::{Error, Result};
use crate::spectral::bracket;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ResonanceCase {
    /// ω·l
    #[serde(rename = "i")]
    Tangential,
    /// ω·l + j/2
    #[serde(rename = "ii")]
    Transport,
    /// ω·l + Ω_j
    #[serde(rename = "iii")]
    FirstOrder,
    /// ω·l + Ω_j + Ω_j'
    #[serde(rename = "iv+")]
    SecondOrderSum,
    /// ω·l + Ω_j − Ω_j'
    #[serde(rename = "iv-")]
    SecondOrderDifference,
}

impl ResonanceCase {
    pub const ALL: [ResonanceCase; 5] = [
        ResonanceCase::Tangential,
        ResonanceCase::Transport,
        ResonanceCase::FirstOrder,
        ResonanceCase::SecondOrderSum,
        ResonanceCase::SecondOrderDifference,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ResonanceCase::Tangential => "i",
            ResonanceCase::Transport => "ii",
            ResonanceCase::FirstOrder => "iii",
            ResonanceCase::SecondOrderSum => "iv+",
            ResonanceCase::SecondOrderDifference => "iv-",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub b: f64,
    pub l: Vec<i64>,
    pub j: Option<i64>,
    pub j0: Option<i64>,
    /// derivative order attaining the max at b
    pub q: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseMinimum {
    pub case: ResonanceCase,
    pub rho0_hat: f64,
    pub witness: Witness,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransversalityReport {
    pub q0: u32,
    pub lmax: i64,
    pub grid_size: usize,
    pub perturbation: f64,
    pub rho0_hat: f64,
    pub cases: Vec<CaseMinimum>,
    /// minimum per (case, l), in lattice order
    pub per_l: Vec<CaseMinimum>,
    /// number of (case, l, j, j') families examined
    pub families: usize,
}

impl TransversalityReport {
    pub fn case(&self, case: ResonanceCase) -> Option<&CaseMinimum> {
        self.cases.iter().find(|c| c.case == case)
    }

    pub fn overall(&self) -> &CaseMinimum {
        self.cases
            .iter()
            .min_by(|a, b| a.rho0_hat.total_cmp(&b.rho0_hat))
            .expect("report holds at least one case")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanConfig {
    /// bound on |l|₁
    pub lmax: i64,
    pub grid_size: usize,
    /// cap on max(j, j') in the difference family; larger indices fall under the transport family
    pub jmax: i64,
    /// sup-size of constant perturbations of ω and of the transport speed
    pub perturbation: f64,
}

impl ScanConfig {
    pub fn new(lmax: i64, grid_size: usize) -> Self {
        ScanConfig { lmax, grid_size, jmax: 50, perturbation: 0.0 }
    }
}

/// One resonance function: f = p/2 with p integral, plus the weight multiplying the
/// perturbation of the transport speed.
struct Family {
    case: ResonanceCase,
    j: Option<i64>,
    j0: Option<i64>,
    doubled: IntPoly,
    /// |l|₁ + |coefficient of the speed|, so a constant perturbation moves f by at most ε·weight
    weight: f64,
}

/// Objective of one family, with the integer coefficients pre-multiplied by falling factorials.
struct Objective {
    q0: usize,
    shift: f64,
    /// (n, [c_n·n!/(n−q)!/2 for q = 0..=q0+1])
    terms: Vec<(i32, Vec<f64>)>,
}

impl Objective {
    fn new(family: &Family, q0: u32, eps: f64) -> Self {
        let terms = family
            .doubled
            .terms()
            .iter()
            .map(|&(n, c)| (n as i32, (0..=q0 + 1).map(|q| 0.5 * (c * falling_factorial(n, q)) as f64).collect()))
            .collect();
        Objective { q0: q0 as usize, shift: eps * family.weight, terms }
    }

    /// |f^{(q)}(b)| for q = 0..=q0+1, or termwise bounds of sup_{[0,b]}|f^{(q)}| when `bound` is set.
    fn derivatives(&self, b: f64, bound: bool, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (n, coef) in &self.terms {
            let top = (*n as usize).min(self.q0 + 1);
            let mut p = b.powi(*n - top as i32);
            for q in (0..=top).rev() {
                out[q] += if bound { coef[q].abs() * p } else { coef[q] * p };
                p *= b;
            }
        }
        if !bound {
            out.iter_mut().for_each(|v| *v = v.abs());
        }
        out[0] = (out[0] - if bound { 0.0 } else { self.shift }).max(0.0);
    }

    fn value(&self, b: f64, work: &mut [f64]) -> (f64, u32) {
        self.derivatives(b, false, work);
        let mut best = (f64::NEG_INFINITY, 0);
        for q in 0..=self.q0 {
            if work[q] > best.0 {
                best = (work[q], q as u32);
            }
        }
        best
    }

    /// Lower bound of the objective over [a, c] ⊂ (0, 1).
    fn lower_bound(&self, a: f64, c: f64, work: &mut [f64], sup: &mut [f64]) -> f64 {
        let mid = 0.5 * (a + c);
        self.derivatives(mid, false, work);
        self.derivatives(c, true, sup);
        (0..=self.q0).map(|q| work[q] - 0.5 * (c - a) * sup[q + 1]).fold(f64::NEG_INFINITY, f64::max)
    }
}

struct Grid {
    b0: f64,
    step: f64,
    n: usize,
}

impl Grid {
    fn at(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.b0 + self.step * (self.n - 1) as f64
        } else {
            self.b0 + self.step * i as f64
        }
    }
}

struct Scratch {
    work: Vec<f64>,
    sup: Vec<f64>,
}

/// Grid minimum of the objective on indices [lo, hi], if below `best`.
fn branch(obj: &Objective, grid: &Grid, lo: usize, hi: usize, best: &mut (f64, f64, u32), s: &mut Scratch) {
    let (a, c) = (grid.at(lo), grid.at(hi));
    if obj.lower_bound(a, c, &mut s.work, &mut s.sup) >= best.0 {
        return;
    }
    if hi - lo < 8 {
        for i in lo..=hi {
            let b = grid.at(i);
            let (v, q) = obj.value(b, &mut s.work);
            if v < best.0 {
                *best = (v, b, q);
            }
        }
        return;
    }
    let mid = lo + (hi - lo) / 2;
    branch(obj, grid, lo, mid, best, s);
    branch(obj, grid, mid + 1, hi, best, s);
}

/// Lattice points with |l|₁ ≤ lmax in lexicographic order.
pub(crate) fn lattice(d: usize, lmax: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p: Vec<i64>| {
                let used: i64 = p.iter().map(|x| x.abs()).sum();
                (-(lmax - used)..=(lmax - used)).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

/// Index families for one l. Indices beyond the cutoffs have |f| ≥ ⟨l⟩ for every b in
/// [b0, b1], hence an objective ≥ 1.
fn families(sys: &FrequencySystem, l: &[i64], cfg: &ScanConfig) -> Result<Vec<Family>> {
    let (b0, b1) = sys.interval();
    let eps = cfg.perturbation;
    let l1: i64 = l.iter().map(|x| x.abs()).sum();
    let bl = bracket(l, 0) as f64;
    let base = sys.doubled_dot(l);
    let speed_max = sys.frequency_vector(b1).into_iter().map(f64::abs).fold(0.0, f64::max);
    // |ω·l| + ε|l|₁ + ⟨l⟩ ≤ threshold
    let threshold = (speed_max + eps + 1.0) * bl;
    let omega_low = |j: i64| -> Result<f64> { Ok(0.5 * doubled_omega(j)?.eval(b0)) };
    let family = |case, j: Option<i64>, j0: Option<i64>, extra: IntPoly, speed: i64| Family {
        case,
        j,
        j0,
        doubled: base.add(&extra),
        weight: (l1 + speed.abs()) as f64,
    };
    let mut out = Vec::new();
    if l1 > 0 {
        out.push(family(ResonanceCase::Tangential, None, None, IntPoly::zero(), 0));
    }
    let mut j = 1;
    while (0.5 - eps) * (j as f64) < threshold {
        if !sys.is_tangential(j) {
            out.push(family(ResonanceCase::Transport, Some(j), None, IntPoly::constant(j as i128), j));
        }
        j += 1;
    }
    let mut normal = Vec::new();
    let mut j = 1;
    while omega_low(j)? - eps * (j as f64) < threshold {
        if !sys.is_tangential(j) {
            normal.push(j);
            out.push(family(ResonanceCase::FirstOrder, Some(j), None, doubled_omega(j)?, j));
        }
        j += 1;
    }
    for (a, &j) in normal.iter().enumerate() {
        for &jp in &normal[a..] {
            if l1 == 0 && j == jp {
                continue;
            }
            if omega_low(j)? + omega_low(jp)? - eps * ((j + jp) as f64) < threshold {
                let extra = doubled_omega(j)?.add(&doubled_omega(jp)?);
                out.push(family(ResonanceCase::SecondOrderSum, Some(j), Some(jp), extra, j + jp));
            }
        }
    }
    for j in 1..=cfg.jmax {
        for jp in 1..=cfg.jmax {
            if sys.is_tangential(j) || sys.is_tangential(jp) || (l1 == 0 && j == jp) {
                continue;
            }
            // |Ω_j − Ω_j'| ≥ (|j − j'| − 1)/2
            let gap = (j - jp).abs();
            if 0.5 * (gap - 1).max(0) as f64 - eps * gap as f64 >= threshold {
                continue;
            }
            let extra = doubled_omega(j)?.sub(&doubled_omega(jp)?);
            out.push(family(ResonanceCase::SecondOrderDifference, Some(j), Some(jp), extra, j - jp));
        }
    }
    Ok(out)
}

fn validate(sys: &FrequencySystem, cfg: &ScanConfig) -> Result<()> {
    if cfg.lmax < 1 {
        return Err(Error::invalid("Lmax must be at least 1"));
    }
    if cfg.grid_size < 2 {
        return Err(Error::invalid("grid needs at least two points"));
    }
    if cfg.jmax < 1 {
        return Err(Error::invalid("jmax must be positive"));
    }
    if !(cfg.perturbation >= 0.0 && cfg.perturbation < 0.25) {
        return Err(Error::invalid(format!("perturbation size {} outside [0, 1/4)", cfg.perturbation)));
    }
    let _ = sys;
    Ok(())
}

/// Minimum over the b-grid of max_{q≤q₀}|∂_b^q f|/⟨l⟩ for every resonance family with |l|₁ ≤ lmax.
pub fn transversality_scan(sys: &FrequencySystem, cfg: &ScanConfig) -> Result<TransversalityReport> {
    validate(sys, cfg)?;
    let (b0, b1) = sys.interval();
    let grid = Grid { b0, step: (b1 - b0) / (cfg.grid_size - 1) as f64, n: cfg.grid_size };
    let lattice = lattice(sys.dim(), cfg.lmax);
    let per_l: Vec<Result<(Vec<CaseMinimum>, usize)>> = lattice
        .par_iter()
        .map(|l| {
            let fams = families(sys, l, cfg)?;
            let bl = bracket(l, 0) as f64;
            let size = sys.q0() as usize + 2;
            let mut scratch = Scratch { work: vec![0.0; size], sup: vec![0.0; size] };
            let mut out: Vec<CaseMinimum> = Vec::new();
            for case in ResonanceCase::ALL {
                let mut best = (f64::INFINITY, f64::NAN, 0u32);
                let mut arg: Option<&Family> = None;
                for fam in fams.iter().filter(|f| f.case == case) {
                    let obj = Objective::new(fam, sys.q0(), cfg.perturbation);
                    let before = best.0;
                    branch(&obj, &grid, 0, grid.n - 1, &mut best, &mut scratch);
                    if best.0 < before {
                        arg = Some(fam);
                    }
                }
                if let Some(fam) = arg {
                    out.push(CaseMinimum {
                        case,
                        rho0_hat: best.0 / bl,
                        witness: Witness { b: best.1, l: l.clone(), j: fam.j, j0: fam.j0, q: best.2 },
                    });
                }
            }
            Ok((out, fams.len()))
        })
        .collect();
    let mut rows = Vec::new();
    let mut count = 0;
    for r in per_l {
        let (mins, n) = r?;
        rows.extend(mins);
        count += n;
    }
    let mut cases = Vec::new();
    for case in ResonanceCase::ALL {
        let best = rows
            .iter()
            .filter(|m| m.case == case)
            .min_by(|a, b| a.rho0_hat.total_cmp(&b.rho0_hat))
            .cloned()
            .ok_or_else(|| Error::EmptyIndexRange(format!("no admissible indices for case {}", case.label())))?;
        cases.push(best);
    }
    let rho0_hat = cases.iter().map(|c| c.rho0_hat).fold(f64::INFINITY, f64::min);
    Ok(TransversalityReport {
        q0: sys.q0(),
        lmax: cfg.lmax,
        grid_size: cfg.grid_size,
        perturbation: cfg.perturbation,
        rho0_hat,
        cases,
        per_l: rows,
        families: count,
    })
}

/// Doubles the grid until ρ̂₀ is stable to three significant digits.
pub fn refine_scan(sys: &FrequencySystem, cfg: &ScanConfig, max_grid: usize) -> Result<TransversalityReport> {
    let mut cfg = cfg.clone();
    let mut prev = transversality_scan(sys, &cfg)?;
    while 2 * cfg.grid_size - 1 <= max_grid {
        cfg.grid_size = 2 * cfg.grid_size - 1;
        let next = transversality_scan(sys, &cfg)?;
        let stable = (next.rho0_hat - prev.rho0_hat).abs() <= 5e-4 * prev.rho0_hat.abs();
        prev = next;
        if stable {
            break;
        }
    }
    Ok(prev)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbedReport {
    pub unperturbed: TransversalityReport,
    pub perturbed: TransversalityReport,
    /// ρ̂₀(ε)/ρ̂₀(0)
    pub retained_fraction: f64,
    pub retains_half: bool,
    /// (ρ̂₀(0) − ρ̂₀(ε))/ε
    pub lipschitz_constant: f64,
}

/// Repeats the scan for the worst constant perturbation of ω and of the transport speed
/// of sup-size ε in every family.
pub fn perturbed_transversality(sys: &FrequencySystem, cfg: &ScanConfig, eps: f64) -> Result<PerturbedReport> {
    let unperturbed = transversality_scan(sys, &ScanConfig { perturbation: 0.0, ..cfg.clone() })?;
    let perturbed = transversality_scan(sys, &ScanConfig { perturbation: eps, ..cfg.clone() })?;
    let retained_fraction = perturbed.rho0_hat / unperturbed.rho0_hat;
    let lipschitz_constant = if eps > 0.0 { (unperturbed.rho0_hat - perturbed.rho0_hat) / eps } else { 0.0 };
    Ok(PerturbedReport {
        retains_half: perturbed.rho0_hat >= 0.5 * unperturbed.rho0_hat,
        unperturbed,
        perturbed,
        retained_fraction,
        lipschitz_constant,
    })
}
