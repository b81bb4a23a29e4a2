//! Patch state R(θ) = √(b² + 2r(θ)) and the two-point boundary kernels.

use crate::error::{Error, Result};
use crate::spectral::PeriodicField;
use std::f64::consts::PI;

/// Fraction of b²/2 that ‖r‖_∞ may reach.
pub const ADMISSIBLE_FRACTION: f64 = 0.999;
/// Required gap between the boundary and the unit circle.
pub const DISC_MARGIN: f64 = 1e-6;

/// Radius parameter b and deformation r on the θ-grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchState {
    b: f64,
    r: PeriodicField,
    radius: Vec<f64>,
}

impl PatchState {
    pub fn new(b: f64, r: PeriodicField) -> Result<Self> {
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::invalid(format!("radius parameter b = {b} outside (0,1)")));
        }
        if r.time_dims() != 0 {
            return Err(Error::invalid("patch deformation must be a θ-only field"));
        }
        let bound = ADMISSIBLE_FRACTION * b * b / 2.0;
        if r.linf() >= bound {
            return Err(Error::DegeneratePatch(format!(
                "‖r‖_∞ = {:.3e} reaches the admissible bound {bound:.3e}",
                r.linf()
            )));
        }
        let radius: Vec<f64> = r.values().iter().map(|&x| (b * b + 2.0 * x).sqrt()).collect();
        if radius.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::DegeneratePatch("R vanishes at a grid node".into()));
        }
        Ok(PatchState { b, r, radius })
    }

    /// The disc of radius b on an m-point grid.
    pub fn disc(b: f64, m: usize) -> Result<Self> {
        Self::new(b, PeriodicField::zeros(&[m])?)
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn r(&self) -> &PeriodicField {
        &self.r
    }

    pub fn m(&self) -> usize {
        self.r.theta_size()
    }

    /// R at the grid nodes.
    pub fn radius(&self) -> &[f64] {
        &self.radius
    }

    /// ∂_θR = ∂_θr / R.
    pub fn radius_derivative(&self) -> Vec<f64> {
        let dr = self.r.derivative_theta();
        dr.values().iter().zip(&self.radius).map(|(d, r)| d / r).collect()
    }

    /// Grid mean of R².
    pub fn mean_radius_sq(&self) -> f64 {
        self.b * self.b + 2.0 * self.r.mean()
    }

    pub fn reflect(&self) -> PatchState {
        PatchState::new(self.b, self.r.reflect()).expect("reflection keeps admissibility")
    }

    /// Error unless max R ≤ 1 − margin.
    pub fn check_inside_disc(&self) -> Result<()> {
        let top = self.radius.iter().cloned().fold(0.0, f64::max);
        if top > 1.0 - DISC_MARGIN {
            return Err(Error::BoundaryContact(format!("max R = {top} too close to the unit circle")));
        }
        Ok(())
    }
}

/// Two-point kernel sampled on the M×M grid, rows θ_i and columns η_k.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelTable {
    m: usize,
    values: Vec<f64>,
    symmetric: bool,
}

impl KernelTable {
    fn build(m: usize, symmetric: bool, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; m * m];
        for i in 0..m {
            for k in 0..m {
                values[i * m + k] = if symmetric && k < i { values[k * m + i] } else { f(i, k) };
            }
        }
        KernelTable { m, values, symmetric }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.m + k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Exact check k(θ,η) = k(η,θ) on the grid.
    pub fn check_symmetry(&self) -> bool {
        (0..self.m).all(|i| (0..self.m).all(|k| self.get(i, k) == self.get(k, i)))
    }
}

fn node(m: usize, i: usize) -> f64 {
    2.0 * PI * i as f64 / m as f64
}

/// sin((η_k − θ_i)/2) with the literal node difference.
fn half_sine(m: usize, i: usize, k: usize) -> f64 {
    (PI * (k as f64 - i as f64) / m as f64).sin()
}

/// g(θ,η) = (f(η) − f(θ))/sin((η−θ)/2), g(θ,θ) = 2∂_θf(θ).
pub fn diagonal_difference_quotient(f: &PeriodicField) -> Result<KernelTable> {
    if f.time_dims() != 0 {
        return Err(Error::invalid("difference quotient needs a θ-only field"));
    }
    let m = f.theta_size();
    let v = f.values();
    let df = f.derivative_theta();
    let d = df.values();
    Ok(KernelTable::build(m, true, |i, k| {
        if i == k {
            2.0 * d[i]
        } else {
            (v[k] - v[i]) / half_sine(m, i, k)
        }
    }))
}

/// A_r(θ,η) = |R(θ)e^{iθ} − R(η)e^{iη}| in the cancellation-free form.
pub fn kernel_a(state: &PatchState) -> KernelTable {
    let m = state.m();
    let rad = state.radius();
    KernelTable::build(m, true, |i, k| {
        if i == k {
            return 0.0;
        }
        let s = half_sine(m, i, k);
        let d = rad[i] - rad[k];
        (d * d + 4.0 * rad[i] * rad[k] * s * s).sqrt()
    })
}

/// v with A_r = 2b|sin((η−θ)/2)|·v; v ≡ 1 at r = 0.
pub fn smooth_factor_v1(state: &PatchState) -> Result<KernelTable> {
    let m = state.m();
    let b = state.b;
    let rad = state.radius();
    let radius_field = PeriodicField::new(vec![m], rad.to_vec())?;
    let g = diagonal_difference_quotient(&radius_field)?;
    // on the diagonal use 2∂_θR = 2∂_θr/R, spectrally exact in r
    let dr = state.radius_derivative();
    Ok(KernelTable::build(m, true, |i, k| {
        let gik = if i == k { 2.0 * dr[i] } else { g.get(i, k) };
        let q = gik / (2.0 * b);
        (q * q + rad[i] * rad[k] / (b * b)).sqrt()
    }))
}

/// B_r(θ,η) = |1 − R(θ)R(η)e^{i(η−θ)}|.
pub fn kernel_b(state: &PatchState) -> Result<KernelTable> {
    state.check_inside_disc()?;
    let m = state.m();
    let rad = state.radius();
    Ok(KernelTable::build(m, true, |i, k| {
        let p = rad[i] * rad[k];
        let s = half_sine(m, i, k);
        ((1.0 - p) * (1.0 - p) + 4.0 * p * s * s).sqrt()
    }))
}

/// R(θ)R(η) − b² computed linearly in r (no cancellation for small r).
pub(crate) fn radius_product_excess(b: f64, ri: f64, rk: f64, rad_i: f64, rad_k: f64) -> f64 {
    let b2 = b * b;
    (2.0 * b2 * (ri + rk) + 4.0 * ri * rk) / (rad_i * rad_k + b2)
}

/// P_r(θ,η) − the relative excess with B_r² = B₀²(1 + P_r), for u = η − θ.
pub(crate) fn p_value(b: f64, ri: f64, rk: f64, rad_i: f64, rad_k: f64, sin_half_u: f64) -> f64 {
    let b2 = b * b;
    let s2 = sin_half_u * sin_half_u;
    let p = rad_i * rad_k;
    let excess = radius_product_excess(b, ri, rk, rad_i, rad_k);
    let b0sq = (1.0 - b2) * (1.0 - b2) + 4.0 * b2 * s2;
    excess * (4.0 * s2 - (2.0 - p - b2)) / b0sq
}

/// P_r with B_r² = B₀²(1 + P_r).
pub fn kernel_p(state: &PatchState) -> Result<KernelTable> {
    state.check_inside_disc()?;
    let m = state.m();
    let rad = state.radius();
    let r = state.r.values();
    Ok(KernelTable::build(m, true, |i, k| {
        p_value(state.b, r[i], r[k], rad[i], rad[k], half_sine(m, i, k))
    }))
}

/// 𝒦₁(u) = ½log sin²(u/2).
pub fn k1_kernel(u: f64) -> f64 {
    (u / 2.0).sin().abs().ln()
}

/// 𝒦₂(u) = log|1 − b²e^{iu}|.
pub fn k2_kernel(b: f64, u: f64) -> f64 {
    let b2 = b * b;
    0.5 * ((1.0 - b2) * (1.0 - b2) + 4.0 * b2 * (u / 2.0).sin().powi(2)).ln()
}

/// Fourier coefficient k of 𝒦₁; the mean is −log 2.
pub fn k1_coefficient(k: i64) -> f64 {
    if k == 0 {
        -std::f64::consts::LN_2
    } else {
        -1.0 / (2.0 * k.abs() as f64)
    }
}

/// Fourier coefficient k of 𝒦₂; the mean vanishes.
pub fn k2_coefficient(b: f64, k: i64) -> f64 {
    if k == 0 {
        0.0
    } else {
        -(b * b).powi(k.abs() as i32) / (2.0 * k.abs() as f64)
    }
}

/// Kernels in shifted coordinates (θ_i, θ_i + u_k), row-major in (i, k).
pub(crate) struct ShiftedKernels {
    /// log v(θ_i, θ_i + u_k)
    pub log_v: Vec<f64>,
    /// ½log(1 + P_r)(θ_i, θ_i + u_k)
    pub half_log1p: Vec<f64>,
}

impl ShiftedKernels {
    pub fn new(state: &PatchState) -> Result<Self> {
        state.check_inside_disc()?;
        let m = state.m();
        let b = state.b;
        let rad = state.radius();
        let dr = state.radius_derivative();
        let r = state.r.values();
        let sines: Vec<f64> = (0..m).map(|k| (PI * k as f64 / m as f64).sin()).collect();
        let mut log_v = vec![0.0; m * m];
        let mut half_log1p = vec![0.0; m * m];
        let b2 = b * b;
        for i in 0..m {
            for k in 0..m {
                let e = (i + k) % m;
                let v2 = if k == 0 {
                    (dr[i] * dr[i] + rad[i] * rad[i]) / b2
                } else {
                    let q = (rad[e] - rad[i]) / (2.0 * b * sines[k]);
                    q * q + rad[i] * rad[e] / b2
                };
                log_v[i * m + k] = 0.5 * v2.ln();
                let p = p_value(b, r[i], r[e], rad[i], rad[e], sines[k]);
                half_log1p[i * m + k] = 0.5 * p.ln_1p();
            }
        }
        Ok(ShiftedKernels { log_v, half_log1p })
    }
}

/// Node angle helper shared with the dynamics.
pub fn theta_node(m: usize, i: usize) -> f64 {
    node(m, i)
}
