//! Linearization of the contour dynamics at a state r.
//!
//! The generator is G ρ = −∂_θ(V_r ρ + 𝐋_r ρ − 𝐒_r ρ), so that ∂_t ρ = G ρ and
//! G = diag(−iΩ_j(b)) at the disc.

mod quadrature;

pub use crate::dynamics::transport_coefficient;
pub use quadrature::{image_log_moment, log_sine_moment};

use crate::error::{Error, Result};
use crate::geometry::{k1_coefficient, k2_coefficient, kernel_a, kernel_b, KernelTable, PatchState, ShiftedKernels};
use crate::spectral::fft::{wavenumber, Plan1d};
use crate::spectral::{symmetric_modes, LinearOperatorMatrix, PeriodicField};
use crate::spectrum::omega;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

/// The nonlocal operators of one state, ready for repeated application.
struct NonlocalParts {
    m: usize,
    log_2b: f64,
    plan: Plan1d,
    k1: Vec<f64>,
    k2: Vec<f64>,
    kernels: ShiftedKernels,
}

impl NonlocalParts {
    fn new(state: &PatchState) -> Result<Self> {
        let m = state.m();
        let b = state.b();
        Ok(NonlocalParts {
            m,
            log_2b: (2.0 * b).ln(),
            plan: Plan1d::new(m),
            k1: (0..m).map(|i| k1_coefficient(wavenumber(i, m))).collect(),
            k2: (0..m).map(|i| k2_coefficient(b, wavenumber(i, m))).collect(),
            kernels: ShiftedKernels::new(state)?,
        })
    }

    fn multiplier(&self, rho: &[f64], symbol: &[f64]) -> Vec<f64> {
        let mut c = self.plan.coeffs(rho);
        c.iter_mut().zip(symbol).for_each(|(z, s)| *z *= s);
        self.plan.synth_real(&c)
    }

    /// (1/M) Σ_k table[i, k] ρ(θ_i + u_k)
    fn smooth_part(&self, table: &[f64], rho: &[f64]) -> Vec<f64> {
        let m = self.m;
        (0..m)
            .map(|i| {
                let row = &table[i * m..(i + 1) * m];
                row.iter().enumerate().map(|(k, t)| t * rho[(i + k) % m]).sum::<f64>() / m as f64
            })
            .collect()
    }

    fn plane(&self, rho: &[f64]) -> Vec<f64> {
        let mean = rho.iter().sum::<f64>() / self.m as f64;
        let conv = self.multiplier(rho, &self.k1);
        let smooth = self.smooth_part(&self.kernels.log_v, rho);
        conv.iter().zip(&smooth).map(|(a, c)| self.log_2b * mean + a + c).collect()
    }

    fn image(&self, rho: &[f64]) -> Vec<f64> {
        let conv = self.multiplier(rho, &self.k2);
        let smooth = self.smooth_part(&self.kernels.half_log1p, rho);
        conv.iter().zip(&smooth).map(|(a, c)| a + c).collect()
    }
}

fn check_rho(state: &PatchState, rho: &PeriodicField) -> Result<()> {
    if rho.shape() != [state.m()] {
        return Err(Error::invalid(format!(
            "field shape {:?} differs from the state grid {}",
            rho.shape(),
            state.m()
        )));
    }
    Ok(())
}

/// 𝐋_r ρ(θ) = ∫ρ(η) log A_r(θ,η) dη.
pub fn nonlocal_l(state: &PatchState, rho: &PeriodicField) -> Result<PeriodicField> {
    check_rho(state, rho)?;
    let parts = NonlocalParts::new(state)?;
    PeriodicField::new(vec![state.m()], parts.plane(rho.values()))
}

/// 𝐒_r ρ(θ) = ∫ρ(η) log B_r(θ,η) dη.
pub fn smoothing_s(state: &PatchState, rho: &PeriodicField) -> Result<PeriodicField> {
    check_rho(state, rho)?;
    let parts = NonlocalParts::new(state)?;
    PeriodicField::new(vec![state.m()], parts.image(rho.values()))
}

/// Transport coefficient, kernel tables and assembled generator at one state.
#[derive(Clone, Debug)]
pub struct LinearizedPieces {
    pub transport: PeriodicField,
    /// A_r on the grid (the plane kernel is its logarithm)
    pub plane_kernel: KernelTable,
    /// B_r on the grid (the image kernel is its logarithm)
    pub image_kernel: KernelTable,
    pub generator: LinearOperatorMatrix,
}

/// Applies a state's linearization repeatedly.
pub struct Linearization {
    transport: Vec<f64>,
    parts: NonlocalParts,
    plan: Plan1d,
}

impl Linearization {
    pub fn new(state: &PatchState) -> Result<Self> {
        Ok(Linearization {
            transport: transport_coefficient(state)?.into_values(),
            parts: NonlocalParts::new(state)?,
            plan: Plan1d::new(state.m()),
        })
    }

    pub fn transport(&self) -> &[f64] {
        &self.transport
    }

    /// V ρ + 𝐋ρ − 𝐒ρ; its negative θ-derivative is the generator.
    pub fn potential(&self, rho: &[f64]) -> Vec<f64> {
        let plane = self.parts.plane(rho);
        let image = self.parts.image(rho);
        (0..rho.len()).map(|i| self.transport[i] * rho[i] + plane[i] - image[i]).collect()
    }

    /// G ρ = −∂_θ(V ρ + 𝐋ρ − 𝐒ρ).
    pub fn apply(&self, rho: &[f64]) -> Vec<f64> {
        let m = self.plan.n;
        let mut c = self.plan.coeffs(&self.potential(rho));
        for (i, z) in c.iter_mut().enumerate() {
            let k = wavenumber(i, m);
            *z *= if 2 * k.unsigned_abs() as usize == m { Complex64::default() } else { Complex64::new(0.0, -(k as f64)) };
        }
        self.plan.synth_real(&c)
    }

    /// Coefficients of an operator's image of e_j for |j| ≤ n, as a matrix over symmetric modes.
    fn matrix_of(&self, n: i64, op: impl Fn(&[f64]) -> Vec<f64> + Sync) -> Result<DMatrix<Complex64>> {
        let m = self.plan.n;
        if 3 * n as usize > m || n < 1 {
            return Err(Error::invalid(format!("truncation {n} needs 1 ≤ N ≤ M/3 = {}", m / 3)));
        }
        let modes = symmetric_modes(n);
        let columns: Vec<(Vec<Complex64>, Vec<Complex64>)> = (1..=n)
            .into_par_iter()
            .map(|j| {
                let cos: Vec<f64> = (0..m).map(|i| (2.0 * std::f64::consts::PI * (j * i as i64) as f64 / m as f64).cos()).collect();
                let sin: Vec<f64> = (0..m).map(|i| (2.0 * std::f64::consts::PI * (j * i as i64) as f64 / m as f64).sin()).collect();
                (self.plan.coeffs(&op(&cos)), self.plan.coeffs(&op(&sin)))
            })
            .collect();
        let size = modes.len();
        let mut mat = DMatrix::zeros(size, size);
        for (jdx, (cc, sc)) in columns.iter().enumerate() {
            let j = jdx as i64 + 1;
            let col_pos = modes.iter().position(|&x| x == j).unwrap();
            let col_neg = modes.iter().position(|&x| x == -j).unwrap();
            for (row, &jp) in modes.iter().enumerate() {
                let s = crate::spectral::fft::slot(jp, m);
                // e_{±j} = cos ± i sin
                mat[(row, col_pos)] = cc[s] + Complex64::i() * sc[s];
                mat[(row, col_neg)] = cc[s] - Complex64::i() * sc[s];
            }
        }
        Ok(mat)
    }

    /// Matrix of G on modes 0 < |j| ≤ n.
    pub fn generator_matrix(&self, n: i64) -> Result<LinearOperatorMatrix> {
        let mat = self.matrix_of(n, |r| self.apply(r))?;
        LinearOperatorMatrix::from_space_matrix(0, symmetric_modes(n), mat)
    }

    /// Matrix of ρ ↦ −(V ρ + 𝐋ρ − 𝐒ρ); at the disc this is L(b) = −1/2 − 𝒦_b∗.
    pub fn potential_matrix(&self, n: i64) -> Result<LinearOperatorMatrix> {
        let mat = self.matrix_of(n, |r| self.potential(r).into_iter().map(|x| -x).collect())?;
        LinearOperatorMatrix::from_space_matrix(0, symmetric_modes(n), mat)
    }
}

/// Assembles the linearization at `state` on modes 0 < |j| ≤ n (n ≤ M/3).
pub fn assemble(state: &PatchState, n: i64) -> Result<LinearizedPieces> {
    let lin = Linearization::new(state)?;
    let generator = lin.generator_matrix(n)?;
    Ok(LinearizedPieces {
        transport: PeriodicField::new(vec![state.m()], lin.transport.clone())?,
        plane_kernel: kernel_a(state),
        image_kernel: kernel_b(state)?,
        generator,
    })
}

/// Multiplier of the equilibrium generator ∂_θL(b) on e_j: −iΩ_j(b).
pub fn equilibrium_multiplier(b: f64, j: i64) -> Result<Complex64> {
    Ok(Complex64::new(0.0, -omega(b, j)?))
}

/// Equilibrium generator as a Fourier multiplier on modes 0 < |j| ≤ n.
pub fn equilibrium_generator(b: f64, n: i64) -> Result<LinearOperatorMatrix> {
    let modes = symmetric_modes(n);
    let diag = modes.iter().map(|&j| equilibrium_multiplier(b, j)).collect::<Result<Vec<_>>>()?;
    LinearOperatorMatrix::multiplier(0, modes, &diag)
}

/// ρ(t,θ) = Σ a_j cos(jθ − Ω_j(b)t) for (j, a_j) in `amplitudes`.
pub fn linear_solution(b: f64, amplitudes: &[(i64, f64)], m: usize, t: f64) -> Result<PeriodicField> {
    let freqs = amplitudes.iter().map(|&(j, _)| omega(b, j)).collect::<Result<Vec<_>>>()?;
    PeriodicField::from_fn_theta(m, |th| {
        amplitudes.iter().zip(&freqs).map(|(&(j, a), w)| a * (j as f64 * th - w * t).cos()).sum()
    })
}

/// max over `times` of ‖∂_tρ − Gρ‖_∞ for the explicit linear solution, G applied at the disc.
pub fn linear_flow_residual(b: f64, amplitudes: &[(i64, f64)], m: usize, times: &[f64]) -> Result<f64> {
    let lin = Linearization::new(&PatchState::disc(b, m)?)?;
    let freqs = amplitudes.iter().map(|&(j, _)| omega(b, j)).collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for &t in times {
        let rho = linear_solution(b, amplitudes, m, t)?;
        let dt = PeriodicField::from_fn_theta(m, |th| {
            amplitudes.iter().zip(&freqs).map(|(&(j, a), w)| a * w * (j as f64 * th - w * t).sin()).sum()
        })?;
        let g = lin.apply(rho.values());
        worst = dt.values().iter().zip(&g).map(|(a, c)| (a - c).abs()).fold(worst, f64::max);
    }
    Ok(worst)
}
