//! Boundary integrals: the velocity functional F_b, the stream gradient ∇E and the energy.

use crate::error::{Error, Result};
use crate::geometry::{k1_coefficient, k2_coefficient, PatchState, ShiftedKernels};
use crate::spectral::fft::{wavenumber, Plan1d};
use crate::spectral::PeriodicField;
use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::num::NonZeroUsize;

/// Default number of Gauss–Legendre nodes along the deformation path.
pub const DEFAULT_ENERGY_NODES: usize = 16;

/// Per-row singular convolutions ∫𝒦(u)h(θ, θ+u)du via Fourier multipliers in u.
pub(crate) struct RowConvolver {
    plan: Plan1d,
    k1: Vec<f64>,
    k2: Vec<f64>,
}

impl RowConvolver {
    pub fn new(m: usize, b: f64) -> Self {
        let k1 = (0..m).map(|i| k1_coefficient(wavenumber(i, m))).collect();
        let k2 = (0..m).map(|i| k2_coefficient(b, wavenumber(i, m))).collect();
        RowConvolver {
            plan: Plan1d::new(m),
            k1,
            k2,
        }
    }

    /// Returns (𝒦₁ ∗ a, 𝒦₂ ∗ c) for two real rows, packed in one transform.
    pub fn pair(&self, a: &[f64], c: &[f64]) -> (f64, f64) {
        let mut buf: Vec<Complex64> = a.iter().zip(c).map(|(&x, &y)| Complex64::new(x, y)).collect();
        self.plan.forward_in_place(&mut buf);
        let mut s1 = Complex64::default();
        let mut s2 = Complex64::default();
        for (k, z) in buf.iter().enumerate() {
            s1 += self.k1[k] * z;
            s2 += self.k2[k] * z;
        }
        let n = self.plan.n as f64;
        (s1.re / n, s2.im / n)
    }
}

/// Geometry of one state in shifted coordinates, shared by all boundary integrals.
struct Frame {
    m: usize,
    b: f64,
    rad: Vec<f64>,
    drad: Vec<f64>,
    cos_u: Vec<f64>,
    sin_u: Vec<f64>,
    kernels: ShiftedKernels,
    conv: RowConvolver,
}

impl Frame {
    fn new(state: &PatchState) -> Result<Self> {
        let m = state.m();
        let kernels = ShiftedKernels::new(state)?;
        let u: Vec<f64> = (0..m).map(|k| 2.0 * PI * k as f64 / m as f64).collect();
        Ok(Frame {
            m,
            b: state.b(),
            rad: state.radius().to_vec(),
            drad: state.radius_derivative(),
            cos_u: u.iter().map(|x| x.cos()).collect(),
            sin_u: u.iter().map(|x| x.sin()).collect(),
            kernels,
            conv: RowConvolver::new(m, state.b()),
        })
    }

    /// ∂_η(R(η) sin(η−θ)) on row i.
    fn w1(&self, i: usize, k: usize) -> f64 {
        let e = (i + k) % self.m;
        self.drad[e] * self.sin_u[k] + self.rad[e] * self.cos_u[k]
    }

    /// −R'(η)cos u + R(η) sin u on row i.
    fn w2(&self, i: usize, k: usize) -> f64 {
        let e = (i + k) % self.m;
        -self.drad[e] * self.cos_u[k] + self.rad[e] * self.sin_u[k]
    }

    fn mean_with(&self, table: &[f64], i: usize, row: &[f64]) -> f64 {
        let m = self.m;
        table[i * m..(i + 1) * m].iter().zip(row).map(|(a, b)| a * b).sum::<f64>() / m as f64
    }
}

/// F_b[r] = −F⁰ − F¹ + F², so that ∂_t r = −F_b[r].
pub fn velocity_functional(state: &PatchState) -> Result<PeriodicField> {
    let f = Frame::new(state)?;
    let m = f.m;
    let mean_r2 = state.mean_radius_sq();
    let dr = state.r().derivative_theta();
    let mut out = vec![0.0; m];
    let mut g1 = vec![0.0; m];
    let mut g2 = vec![0.0; m];
    for i in 0..m {
        let (ri, dri) = (f.rad[i], f.drad[i]);
        for k in 0..m {
            let (a, c) = (f.w1(i, k), f.w2(i, k));
            g1[k] = dri * a + ri * c;
            g2[k] = -dri / (ri * ri) * a + c / ri;
        }
        let (s1, s2) = f.conv.pair(&g1, &g2);
        let f1 = s1 + f.mean_with(&f.kernels.log_v, i, &g1);
        let f2 = s2 + f.mean_with(&f.kernels.half_log1p, i, &g2);
        let f0 = 0.5 * dr.values()[i] * mean_r2 / (ri * ri);
        out[i] = -f0 - f1 + f2;
    }
    PeriodicField::new(vec![m], out)
}

/// V_r(θ): the coefficient of the transport part of the linearization.
pub fn transport_coefficient(state: &PatchState) -> Result<PeriodicField> {
    let f = Frame::new(state)?;
    let m = f.m;
    let mean_r2 = state.mean_radius_sq();
    let mut out = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m {
        let ri = f.rad[i];
        for (k, x) in w.iter_mut().enumerate() {
            *x = f.w1(i, k);
        }
        let (s1, s2) = f.conv.pair(&w, &w);
        let la = s1 + f.mean_with(&f.kernels.log_v, i, &w);
        let lb = s2 + f.mean_with(&f.kernels.half_log1p, i, &w);
        out[i] = -0.5 * mean_r2 / (ri * ri) - la / ri - lb / (ri * ri * ri);
    }
    PeriodicField::new(vec![m], out)
}

/// ∇E(r)(θ) = 2Ψ(R(θ)e^{iθ}) from the boundary representation of the stream function.
pub fn stream_gradient(state: &PatchState) -> Result<PeriodicField> {
    let f = Frame::new(state)?;
    let m = f.m;
    let log2b = (2.0 * f.b).ln();
    let mut out = vec![0.0; m];
    let mut ia = vec![0.0; m];
    let mut ic = vec![0.0; m];
    for i in 0..m {
        let ri = f.rad[i];
        for k in 0..m {
            let e = (i + k) % m;
            let w = f.w1(i, k);
            let re2 = f.rad[e] * f.rad[e];
            ia[k] = re2 - ri * w;
            ic[k] = re2 - w / ri;
        }
        let (s1, s2) = f.conv.pair(&ia, &ic);
        let mean_a = ia.iter().sum::<f64>() / m as f64;
        let plane = log2b * mean_a + s1 + f.mean_with(&f.kernels.log_v, i, &ia);
        let image = s2 + f.mean_with(&f.kernels.half_log1p, i, &ic);
        out[i] = plane - image;
    }
    PeriodicField::new(vec![m], out)
}

/// Energy of the disc of radius b.
pub fn disc_energy(b: f64) -> f64 {
    let b4 = b.powi(4);
    b4 * b.ln() / 4.0 - b4 / 16.0
}

/// E(r) − E(0) = ∫₀¹⟨∇E(s·r), r⟩ds, Gauss–Legendre in s.
pub fn energy_increment(state: &PatchState, nodes: usize) -> Result<f64> {
    let n = NonZeroUsize::new(nodes).ok_or_else(|| Error::invalid("energy needs at least one quadrature node"))?;
    state.check_inside_disc()?;
    if state.r().linf() == 0.0 {
        return Ok(0.0);
    }
    let rule = GaussLegendre::new(n);
    let mut total = 0.0;
    for &(x, w) in rule.as_node_weight_pairs() {
        let s = 0.5 * (x + 1.0);
        let sub = PatchState::new(state.b(), state.r().scale(s))?;
        total += 0.5 * w * stream_gradient(&sub)?.inner(state.r())?;
    }
    Ok(total)
}

/// Kinetic-energy functional E(r).
pub fn energy(state: &PatchState, nodes: usize) -> Result<f64> {
    Ok(disc_energy(state.b()) + energy_increment(state, nodes)?)
}

/// H(r) = −E(r)/2.
pub fn hamiltonian(state: &PatchState, nodes: usize) -> Result<f64> {
    Ok(-0.5 * energy(state, nodes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Coeffs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn omega(b: f64, j: i64) -> f64 {
        let a = j.abs();
        j.signum() as f64 * ((a - 1) as f64 + b.powi(2 * a as i32)) / 2.0
    }

    fn state(b: f64, m: usize, f: impl Fn(f64) -> f64) -> PatchState {
        PatchState::new(b, PeriodicField::from_fn_theta(m, f).unwrap()).unwrap()
    }

    fn random_r(rng: &mut ChaCha8Rng, m: usize, amp: f64) -> PeriodicField {
        let c: Vec<(f64, f64)> = (0..5).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        PeriodicField::from_fn_theta(m, |t| {
            c.iter()
                .enumerate()
                .map(|(j, (a, s))| {
                    let jj = (j + 1) as f64;
                    amp * (a * (jj * t).cos() + s * (jj * t).sin()) / (jj * jj)
                })
                .sum::<f64>()
        })
        .unwrap()
    }

    /// Independent energy oracle: polar expansion of log|w−ξ| in the smaller/larger
    /// radius ratio with exact radial integrals, and the image term as a series
    /// in the angular moments of R^{k+2}.
    fn energy_oracle(state: &PatchState, kmax: usize) -> f64 {
        let m = state.m();
        let rad = state.radius();
        let alpha = |k: usize, r1: f64, r2: f64| -> f64 {
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            if k == 0 {
                return lo.powi(4) / 16.0 + lo * lo / 2.0 * (hi * hi / 2.0 * hi.ln() - hi * hi / 4.0);
            }
            let kf = k as f64;
            let first = lo.powi(4) / (4.0 * (kf + 2.0));
            let second = if k == 2 {
                lo.powi(4) / 4.0 * (hi / lo).ln() + lo.powi(4) / 16.0
            } else {
                (hi.powf(2.0 - kf) * lo.powf(kf + 2.0) / (kf + 2.0) - lo.powi(4) / 4.0) / (2.0 - kf)
            };
            first + second
        };
        let mut plane = 0.0;
        for i in 0..m {
            for e in 0..m {
                let u = 2.0 * PI * (e as f64 - i as f64) / m as f64;
                let mut acc = alpha(0, rad[i], rad[e]);
                for k in 1..=kmax {
                    acc -= alpha(k, rad[i], rad[e]) * (k as f64 * u).cos() / k as f64;
                }
                plane += acc;
            }
        }
        plane /= (m * m) as f64;
        let mut image = 0.0;
        for k in 1..=kmax {
            let ck: Complex64 = (0..m)
                .map(|i| Complex64::from_polar(rad[i].powi(k as i32 + 2), k as f64 * 2.0 * PI * i as f64 / m as f64))
                .sum::<Complex64>()
                / m as f64;
            let kf = k as f64;
            image += ck.norm_sqr() / (kf * (kf + 2.0).powi(2));
        }
        // log|1 − wξ̄| integrates to −Σ|c_k|²/(k(k+2)²)
        plane + image
    }

    #[test]
    fn disc_is_stationary() {
        for b in [0.25, 0.5, 0.75] {
            let s = PatchState::disc(b, 64).unwrap();
            assert!(velocity_functional(&s).unwrap().linf() <= 1e-12);
            let v = transport_coefficient(&s).unwrap();
            assert!(v.values().iter().all(|x| (x - 0.5).abs() < 1e-12));
            let g = stream_gradient(&s).unwrap();
            assert!(g.values().iter().all(|x| (x - b * b * b.ln()).abs() < 1e-13));
        }
    }

    #[test]
    fn linearization_matches_equilibrium_frequencies() {
        // −d F_b(0)[cos jθ] should be the generator image Ω_j sin jθ; residual O(ε)
        let b = 0.5;
        let m = 64;
        for j in 1..6i64 {
            let mut errs = Vec::new();
            for eps in [1e-4, 1e-5] {
                let s = state(b, m, |t| eps * (j as f64 * t).cos());
                let f = velocity_functional(&s).unwrap();
                let expect = PeriodicField::from_fn_theta(m, |t| omega(b, j) * (j as f64 * t).sin()).unwrap();
                errs.push((&f.scale(-1.0 / eps) - &expect).linf());
            }
            let ratio = errs[1] / errs[0];
            assert!(errs[1] < 1e-4 && (0.08..0.12).contains(&ratio), "j={j}: {errs:?}");
        }
    }

    #[test]
    fn even_states_give_odd_velocity() {
        let m = 64;
        let s = state(0.5, m, |t| 1e-2 * ((2.0 * t).cos() + 0.4 * (3.0 * t).cos()));
        let f = velocity_functional(&s).unwrap();
        assert!((&f.reflect() + &f).linf() < 1e-15);
        let v = transport_coefficient(&s).unwrap();
        assert!((&v.reflect() - &v).linf() < 1e-15);
    }

    #[test]
    fn velocity_is_half_theta_derivative_of_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for b in [0.3, 0.6] {
            let s = PatchState::new(b, random_r(&mut rng, 128, 2e-2)).unwrap();
            let f = velocity_functional(&s).unwrap();
            let dg = stream_gradient(&s).unwrap().derivative_theta().scale(0.5);
            assert!((&f - &dg).linf() < 1e-8, "{}", (&f - &dg).linf());
        }
    }

    #[test]
    fn energy_matches_series_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let b = 0.5;
        let s0 = PatchState::disc(b, 64).unwrap();
        assert!((energy_oracle(&s0, 4) - disc_energy(b)).abs() < 1e-15);
        let r = random_r(&mut rng, 64, 2e-2);
        let e = energy(&PatchState::new(b, r.clone()).unwrap(), DEFAULT_ENERGY_NODES).unwrap();
        // the oracle needs a fine angular grid (kink of min/max on R(θ) = R(η)); resample r exactly
        let coarse = r.coeffs();
        let fine = PeriodicField::from_fn_theta(256, |t| {
            coarse.modes().iter().zip(coarse.data()).map(|((_, j, _), z)| (z * Complex64::from_polar(1.0, *j as f64 * t)).re).sum()
        })
        .unwrap();
        let oracle = energy_oracle(&PatchState::new(b, fine).unwrap(), 127);
        assert!((e - oracle).abs() < 1e-8, "{e} vs {oracle}");
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = 64;
        let b = 0.5;
        let r = random_r(&mut rng, m, 2e-2);
        let s = PatchState::new(b, r.clone()).unwrap();
        let grad = stream_gradient(&s).unwrap();
        for _ in 0..5 {
            let rho = random_r(&mut rng, m, 1.0);
            let eps = 1e-5;
            let plus = PatchState::new(b, &r + &rho.scale(eps)).unwrap();
            let minus = PatchState::new(b, &r - &rho.scale(eps)).unwrap();
            let fd = (energy_increment(&plus, 16).unwrap() - energy_increment(&minus, 16).unwrap()) / (2.0 * eps);
            let exact = grad.inner(&rho).unwrap();
            assert!(((fd - exact) / exact).abs() < 1e-6, "{fd} vs {exact}");
        }
    }

    #[test]
    fn energy_is_reflection_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = PatchState::new(0.6, random_r(&mut rng, 64, 2e-2)).unwrap();
        let e1 = energy(&s, 12).unwrap();
        let e2 = energy(&s.reflect(), 12).unwrap();
        assert!((e1 - e2).abs() < 1e-15);
        assert_eq!(hamiltonian(&PatchState::disc(0.6, 64).unwrap(), 12).unwrap(), -0.5 * disc_energy(0.6));
    }

    #[test]
    fn hamiltonian_quadratic_form() {
        // H(ερ) − H(0) = ε²H_L(ρ) + O(ε³), H_L(ρ) = −Σ_j Ω_j/(2j)|ρ_j|² over all j ≠ 0
        let m = 64;
        let b = 0.5;
        let rho = PeriodicField::from_fn_theta(m, |t| (2.0 * t).cos() + 0.5 * (3.0 * t).sin() - 0.3 * t.cos()).unwrap();
        let c: Coeffs = rho.coeffs();
        let hl: f64 = c
            .modes()
            .iter()
            .zip(c.data())
            .filter(|((_, j, ny), _)| *j != 0 && !ny)
            .map(|((_, j, _), z)| -omega(b, *j) / (2.0 * *j as f64) * z.norm_sqr())
            .sum();
        let mut errs = Vec::new();
        for eps in [1e-2, 1e-3] {
            let s = PatchState::new(b, rho.scale(eps)).unwrap();
            let dh = -0.5 * energy_increment(&s, 8).unwrap();
            errs.push(((dh / (eps * eps) - hl) / hl).abs());
        }
        assert!(errs[1] <= 1e-3 && errs[1] < errs[0], "{errs:?}");
    }
}
