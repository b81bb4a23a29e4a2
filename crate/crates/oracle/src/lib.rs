//! Reference computations written without the library's kernel splitting or FFTs.
//!
//! Everything here works on plain sample vectors so the test suites can compare the
//! library against it without sharing code paths.

use num_complex::Complex64;
use std::f64::consts::PI;

fn dft_coefficient(values: &[Complex64], j: i64) -> Complex64 {
    let m = values.len();
    values
        .iter()
        .enumerate()
        .map(|(k, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (j * k as i64) as f64 / m as f64))
        .sum::<Complex64>()
        / m as f64
}

/// Spectral θ-derivative of real samples via a direct DFT.
pub fn spectral_derivative(values: &[f64]) -> Vec<f64> {
    let m = values.len();
    let cv: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let half = (m / 2) as i64;
    let coeffs: Vec<(i64, Complex64)> = (-half + 1..half).map(|j| (j, dft_coefficient(&cv, j))).collect();
    (0..m)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / m as f64;
            coeffs
                .iter()
                .map(|(j, c)| (Complex64::new(0.0, *j as f64) * c * Complex64::from_polar(1.0, *j as f64 * th)).re)
                .sum()
        })
        .collect()
}

/// Normalized Kress weights: (1/2π)∫log(4 sin²((θ_i − η)/2)) f(η)dη ≈ Σ_k w[(i−k) mod M] f(θ_k).
pub fn kress_weights(m: usize) -> Vec<f64> {
    assert!(m % 2 == 0, "Kress weights need an even node count");
    let n = m / 2;
    let nf = n as f64;
    (0..m)
        .map(|d| {
            let t = PI * d as f64 / nf;
            let s: f64 = (1..n).map(|k| (k as f64 * t).cos() / k as f64).sum();
            -s / nf - (nf * t).cos() / (2.0 * nf * nf)
        })
        .collect()
}

/// Linearized generator G ρ = −∂_θ(Vρ + ∫ρ log|z(θ)−z(η)| − ∫ρ log|1 − z̄(θ)z(η)|)
/// at the boundary z = √(b² + 2r) e^{iθ}, as a matrix over the modes −n..n without 0.
/// Singular logarithms use Kress product weights; smooth parts use the trapezoid rule.
pub fn brute_force_generator(b: f64, r: &[f64], n: i64) -> Vec<Vec<Complex64>> {
    let m = r.len();
    let theta: Vec<f64> = (0..m).map(|k| 2.0 * PI * k as f64 / m as f64).collect();
    let rad: Vec<f64> = r.iter().map(|x| (b * b + 2.0 * x).sqrt()).collect();
    let drad: Vec<f64> = spectral_derivative(r).iter().zip(&rad).map(|(d, rr)| d / rr).collect();
    let z: Vec<Complex64> = rad.iter().zip(&theta).map(|(rr, t)| Complex64::from_polar(*rr, *t)).collect();
    let w = kress_weights(m);
    let mf = m as f64;

    // log|z_i − z_k| − ½log(4 sin²((θ_i − θ_k)/2)), with the diagonal limit log|z'|
    let smooth_plane = |i: usize, k: usize| -> f64 {
        if i == k {
            0.5 * (drad[i] * drad[i] + rad[i] * rad[i]).ln()
        } else {
            let s = ((theta[i] - theta[k]) / 2.0).sin();
            (z[i] - z[k]).norm().ln() - 0.5 * (4.0 * s * s).ln()
        }
    };
    let image = |i: usize, k: usize| -> f64 { (Complex64::new(1.0, 0.0) - z[i].conj() * z[k]).norm().ln() };
    let plane = |i: usize, f: &dyn Fn(usize) -> Complex64| -> Complex64 {
        (0..m)
            .map(|k| f(k) * (0.5 * w[(i + m - k) % m] + smooth_plane(i, k) / mf))
            .sum()
    };
    let mean_r2 = rad.iter().map(|x| x * x).sum::<f64>() / mf;
    let transport: Vec<f64> = (0..m)
        .map(|i| {
            let weight = |k: usize| -> Complex64 {
                let u = theta[k] - theta[i];
                Complex64::new(drad[k] * u.sin() + rad[k] * u.cos(), 0.0)
            };
            let la = plane(i, &weight).re;
            let lb: f64 = (0..m).map(|k| image(i, k) * weight(k).re).sum::<f64>() / mf;
            -0.5 * mean_r2 / (rad[i] * rad[i]) - la / rad[i] - lb / rad[i].powi(3)
        })
        .collect();

    let modes: Vec<i64> = (-n..=n).filter(|&j| j != 0).collect();
    let mut mat = vec![vec![Complex64::default(); modes.len()]; modes.len()];
    for (col, &j) in modes.iter().enumerate() {
        let e = |k: usize| Complex64::from_polar(1.0, j as f64 * theta[k]);
        let pot: Vec<Complex64> = (0..m)
            .map(|i| {
                let s: Complex64 = (0..m).map(|k| e(k) * image(i, k)).sum::<Complex64>() / mf;
                transport[i] * e(i) + plane(i, &e) - s
            })
            .collect();
        for (row, &jp) in modes.iter().enumerate() {
            mat[row][col] = Complex64::new(0.0, -(jp as f64)) * dft_coefficient(&pot, jp);
        }
    }
    mat
}
