use super::{default_indices, smooth_cutoff, truncation_schedule, CutMode, StepRecord};
use crate::error::{Error, Result};
use crate::spectral::{bracket, symmetric_modes, LinearOperatorMatrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;

type C = Complex64;

const NEUMANN_TAIL: f64 = 1e-14;

/// Parameters of the remainder reduction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KamSpec {
    pub gamma: f64,
    pub tau2: f64,
    /// N₀ of the schedule N_m = N₀^{(3/2)^m}
    pub n0: f64,
    /// largest stored time offset |k|_∞ of any operator
    pub window_cap: i64,
    pub s0: f64,
    pub sh: f64,
}

impl KamSpec {
    /// Defaults for d tangential sites {1..d}: q₀ = 2d+2, τ₂ = 2dq₀+2.
    pub fn new(d: usize) -> Self {
        let q0 = 2.0 * d as f64 + 2.0;
        let (s0, sh) = default_indices(d);
        KamSpec {
            gamma: 1e-3,
            tau2: 2.0 * d as f64 * q0 + 2.0,
            n0: 4.0,
            window_cap: if d == 1 { 24 } else { 6 },
            s0,
            sh,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid(format!("γ = {} outside (0,1)", self.gamma)));
        }
        if !(self.tau2 > 0.0) {
            return Err(Error::invalid("τ₂ must be positive"));
        }
        if !(self.n0 > 1.0) {
            return Err(Error::invalid("N₀ must exceed 1"));
        }
        if self.window_cap < 1 {
            return Err(Error::invalid("window cap must be at least 1"));
        }
        if !(self.sh >= self.s0 && self.s0 >= 0.0) {
            return Err(Error::invalid("need 0 ≤ s₀ ≤ s_h"));
        }
        Ok(())
    }

    pub fn truncation(&self, step: usize) -> i64 {
        truncation_schedule(self.n0, step)
    }
}

/// Snapshot of 𝓛_m = ω·∂_φ + diag(iμ_j) + R_m.
#[derive(Clone, Debug)]
pub struct ReductionState {
    step: usize,
    mu: Vec<f64>,
    remainder: LinearOperatorMatrix,
    history: Vec<StepRecord>,
    last: Option<Homological>,
}

fn mirror(k: &[i64]) -> Vec<i64> {
    k.iter().map(|x| -x).collect()
}

fn structure_tol(op: &LinearOperatorMatrix) -> f64 {
    1e-12 * op.max_abs() + f64::MIN_POSITIVE
}

fn check_structure(mu: &[f64], modes: &[i64], remainder: &LinearOperatorMatrix) -> Result<()> {
    for (a, &j) in modes.iter().enumerate() {
        let b = modes
            .iter()
            .position(|&x| x == -j)
            .ok_or_else(|| Error::invalid(format!("mode {j} present without {}", -j)))?;
        let scale = mu[a].abs().max(1.0);
        if (mu[a] + mu[b]).abs() > 1e-14 * scale {
            return Err(Error::invariant("odd spectrum", format!("μ_{j} + μ_{} = {:.3e}", -j, mu[a] + mu[b])));
        }
    }
    if !remainder.is_toeplitz() {
        return Err(Error::invalid("remainder must be Toeplitz in time"));
    }
    let tol = structure_tol(remainder);
    if !remainder.is_real(tol) || !remainder.is_reversible(tol) {
        return Err(Error::invariant("reversible remainder", "symbols break the reversible sign law"));
    }
    Ok(())
}

impl ReductionState {
    /// `mu[a]` is the real frequency of `remainder.modes()[a]`; the diagonal operator is iμ_j.
    pub fn new(mu: Vec<f64>, remainder: LinearOperatorMatrix, spec: &KamSpec) -> Result<Self> {
        spec.validate()?;
        if mu.len() != remainder.modes().len() {
            return Err(Error::invalid("one frequency per space mode required"));
        }
        check_structure(&mu, remainder.modes(), &remainder)?;
        let row = StepRecord {
            step: 0,
            truncation: spec.truncation(0),
            delta_s0: remainder.offdiag_norm(spec.s0)?,
            delta_sh: remainder.offdiag_norm(spec.sh)?,
            cut_fraction: 0.0,
            speed: 0.5,
        };
        Ok(ReductionState {
            step: 0,
            mu,
            remainder,
            history: vec![row],
            last: None,
        })
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn modes(&self) -> &[i64] {
        self.remainder.modes()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// Diagonal entries iμ_j.
    pub fn diagonal(&self) -> Vec<C> {
        self.mu.iter().map(|&m| C::new(0.0, m)).collect()
    }

    pub fn diagonal_operator(&self) -> Result<LinearOperatorMatrix> {
        LinearOperatorMatrix::multiplier(self.remainder.time_dims(), self.modes().to_vec(), &self.diagonal())
    }

    pub fn remainder(&self) -> &LinearOperatorMatrix {
        &self.remainder
    }

    pub fn history(&self) -> &[StepRecord] {
        &self.history
    }

    /// Transformation that produced this state (None for the initial state).
    pub fn last_transform(&self) -> Option<&Homological> {
        self.last.as_ref()
    }

    fn mu_of(&self, j: i64) -> f64 {
        self.remainder.mode_index(j).map_or(0.0, |a| self.mu[a])
    }
}

/// Solution of the remainder homological equation at one step.
#[derive(Clone, Debug)]
pub struct Homological {
    pub psi: LinearOperatorMatrix,
    /// (1 − χ)·(P_N R) on off-diagonal slots: what the cut-off leaves unsolved
    pub defect: LinearOperatorMatrix,
    pub cuts: Vec<CutMode>,
    /// off-diagonal slots of P_N inspected
    pub considered: usize,
    /// max residual of the homological equation over slots with χ = 1
    pub residual: f64,
    pub truncation: i64,
}

impl Homological {
    pub fn cut_fraction(&self) -> f64 {
        if self.considered == 0 {
            0.0
        } else {
            self.cuts.len() as f64 / self.considered as f64
        }
    }
}

fn divisor(state: &ReductionState, omega: &[f64], k: &[i64], j: i64, j0: i64) -> f64 {
    let w: f64 = k.iter().zip(omega).map(|(&a, &o)| a as f64 * o).sum();
    w + state.mu_of(j) - state.mu_of(j0)
}

fn time_bracket(k: &[i64]) -> f64 {
    k.iter().map(|x| x.abs()).sum::<i64>().max(1) as f64
}

/// Ψ with i(ω·k + μ_j − μ_{j₀})Ψ_j^{j₀}(k) = −χ·R_j^{j₀}(k) on P_N, diagonal slots excluded.
pub fn solve_remainder_homological(
    state: &ReductionState,
    omega: &[f64],
    gamma: f64,
    tau2: f64,
    n: i64,
) -> Result<Homological> {
    let r = &state.remainder;
    if omega.len() != r.time_dims() {
        return Err(Error::invalid("frequency vector length differs from time dimensions"));
    }
    if n < 1 {
        return Err(Error::invalid(format!("truncation {n} must be at least 1")));
    }
    let projected = r.project_bracket(n)?;
    let mut psi = LinearOperatorMatrix::toeplitz_zeros(r.time_dims(), r.modes().to_vec(), r.window())?;
    let mut defect = psi.clone();
    let mut cuts = Vec::new();
    let mut considered = 0usize;
    let mut solved = Vec::new();
    for (k, j, j0, v) in projected.symbols() {
        if (j == j0 && k.iter().all(|&x| x == 0)) || bracket(&k, j - j0) > n {
            continue;
        }
        considered += 1;
        let div = divisor(state, omega, &k, j, j0);
        let height = gamma * (j - j0).abs().max(1) as f64 / time_bracket(&k).powf(tau2);
        let chi = smooth_cutoff(div / height);
        if chi < 1.0 {
            cuts.push(CutMode {
                l: k.clone(),
                j,
                j0: Some(j0),
                divisor: div,
                chi,
            });
            defect.set_symbol(&k, j, j0, v * (1.0 - chi))?;
        }
        if chi > 0.0 {
            psi.set_symbol(&k, j, j0, -v * chi / C::new(0.0, div))?;
        }
        if chi == 1.0 {
            solved.push((k, j, j0, v, div));
        }
    }
    let residual = solved
        .iter()
        .map(|(k, j, j0, v, div)| (C::new(0.0, *div) * psi.symbol(k, *j, *j0) + v).norm())
        .fold(0.0, f64::max);
    Ok(Homological {
        psi,
        defect,
        cuts,
        considered,
        residual,
        truncation: n,
    })
}

fn band_sup(op: &LinearOperatorMatrix, radius: Option<i64>) -> f64 {
    let mut sup: BTreeMap<(Vec<i64>, i64), f64> = BTreeMap::new();
    for (k, j, j0, v) in op.symbols() {
        if radius.is_some_and(|r| k.iter().map(|x| x.abs()).sum::<i64>() > r) {
            continue;
        }
        let e = sup.entry((k, j - j0)).or_insert(0.0);
        *e = e.max(v.norm());
    }
    sup.values().sum()
}

/// Σ_{(k,m)} sup_{j−j₀=m}|T_j^{j₀}(k)|, an upper bound of the ℓ² operator norm.
pub fn band_sum(op: &LinearOperatorMatrix) -> f64 {
    band_sup(op, None)
}

/// Σ (−Ψ)^p until the newest term drops below the relative tail.
fn neumann_inverse(psi: &LinearOperatorMatrix, cap: i64) -> Result<LinearOperatorMatrix> {
    let id = LinearOperatorMatrix::identity(psi.time_dims(), psi.modes().to_vec())?;
    let minus = psi.scale(C::new(-1.0, 0.0));
    let mut term = id.clone();
    let mut inv = id;
    for _ in 0..200 {
        term = minus.compose_capped(&term, Some(cap))?;
        inv = inv.add(&term)?;
        if term.max_abs() <= NEUMANN_TAIL * inv.max_abs() {
            return Ok(inv);
        }
    }
    Err(Error::StepFailure("Neumann series for Φ⁻¹ did not reach its tail".into()))
}

/// One KAM step: 𝒟_{m+1} = 𝒟_m + ⌊P_N R_m⌋, R_{m+1} = Φ⁻¹(−Ψ⌊P_N R_m⌋ + P_N^⊥R_m + R_mΨ).
pub fn kam_step(state: &ReductionState, omega: &[f64], spec: &KamSpec) -> Result<ReductionState> {
    spec.validate()?;
    let n = spec.truncation(state.step);
    let h = solve_remainder_homological(state, omega, spec.gamma, spec.tau2, n)?;
    let size = band_sum(&h.psi);
    if !(size < 0.5) {
        return Err(Error::StepFailure(format!("Φ = Id + Ψ not safely invertible (band sum of Ψ = {size:.3e})")));
    }
    let cap = Some(spec.window_cap);
    let r = &state.remainder;
    let projected = r.project_bracket(n)?;
    let floor = projected.diagonal_part()?;
    let inv = neumann_inverse(&h.psi, spec.window_cap)?;
    let inner = h
        .psi
        .compose_capped(&floor, cap)?
        .scale(C::new(-1.0, 0.0))
        .add(&r.sub(&projected)?)?
        .add(&r.compose_capped(&h.psi, cap)?)?;
    let remainder = inv.compose_capped(&inner, cap)?;
    let mut mu = state.mu.clone();
    for (a, z) in floor.diagonal().iter().enumerate() {
        let shift = C::new(0.0, -1.0) * z;
        if shift.im.abs() > 1e-12 * shift.norm().max(f64::MIN_POSITIVE) + f64::MIN_POSITIVE {
            return Err(Error::invariant("pure-imaginary diagonal", format!("correction {shift} is not real")));
        }
        mu[a] += shift.re;
    }
    check_structure(&mu, remainder.modes(), &remainder)?;
    let mut history = state.history.clone();
    history.push(StepRecord {
        step: state.step + 1,
        truncation: spec.truncation(state.step + 1),
        delta_s0: remainder.offdiag_norm(spec.s0)?,
        delta_sh: remainder.offdiag_norm(spec.sh)?,
        cut_fraction: h.cut_fraction(),
        speed: 0.5,
    });
    Ok(ReductionState {
        step: state.step + 1,
        mu,
        remainder,
        history,
        last: Some(h),
    })
}

/// Runs `steps` KAM steps from `state`.
pub fn reduce(state: ReductionState, omega: &[f64], spec: &KamSpec, steps: usize) -> Result<ReductionState> {
    let mut s = state;
    for _ in 0..steps {
        s = kam_step(&s, omega, spec)?;
    }
    Ok(s)
}

/// Band-sum norm, over |k|₁ ≤ radius, of 𝓛_mΦ − Φ(ω·∂_φ + 𝒟_{m+1} + R_{m+1}) − E
/// where E is the cut-off defect. Zero up to round-off when the step is exact.
pub fn conjugation_defect(before: &ReductionState, after: &ReductionState, omega: &[f64], radius: i64) -> Result<f64> {
    let h = after
        .last
        .as_ref()
        .ok_or_else(|| Error::invalid("state carries no transformation"))?;
    let psi = &h.psi;
    let id = LinearOperatorMatrix::identity(psi.time_dims(), psi.modes().to_vec())?;
    let phi = id.add(psi)?;
    // [ω·∂_φ, Ψ] has symbol iω·k Ψ(k)
    let mut commutator = psi.clone();
    for (k, j, j0, v) in psi.symbols() {
        let w: f64 = k.iter().zip(omega).map(|(&a, &o)| a as f64 * o).sum();
        commutator.set_symbol(&k, j, j0, C::new(0.0, w) * v)?;
    }
    let old = before.diagonal_operator()?.add(&before.remainder)?;
    let new = after.diagonal_operator()?.add(&after.remainder)?;
    let lhs = commutator.add(&old.compose(&phi)?)?;
    let diff = lhs.sub(&phi.compose(&new)?)?.sub(&h.defect)?;
    Ok(band_sup(&diff, Some(radius)))
}

/// Random real reversible remainder on modes ±1..±n with symbols
/// i·a·⟨k,j−j₀⟩^{−(s₀+2)}/max(|j|,|j₀|), a ∈ [−1,1], supported on ⟨k,j−j₀⟩ ≤ band,
/// scaled to ‖R‖_{s₀} = delta.
pub fn synthetic_remainder(
    seed: u64,
    d: usize,
    n: i64,
    band: i64,
    delta: f64,
    s0: f64,
) -> Result<LinearOperatorMatrix> {
    if n < 1 || band < 1 {
        return Err(Error::invalid("need at least one mode and band ≥ 1"));
    }
    if !(delta >= 0.0) {
        return Err(Error::invalid("remainder size must be ≥ 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut op = LinearOperatorMatrix::toeplitz_zeros(d, symmetric_modes(n), band)?;
    for (k, j, j0, _) in op.symbols() {
        let nk = mirror(&k);
        let br = bracket(&k, j - j0);
        if br > band || op.symbol(&nk, -j, -j0) != C::default() {
            continue;
        }
        let a: f64 = rng.gen_range(-1.0..1.0);
        let w = (br as f64).powf(-(s0 + 2.0)) / j.abs().max(j0.abs()) as f64;
        let v = C::new(0.0, a * w);
        op.set_symbol(&k, j, j0, v)?;
        op.set_symbol(&nk, -j, -j0, -v)?;
    }
    let norm = op.offdiag_norm(s0)?;
    Ok(if norm > 0.0 { op.scale(C::new(delta / norm, 0.0)) } else { op })
}
