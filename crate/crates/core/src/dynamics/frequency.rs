//! Dominant-frequency estimation for sampled complex signals.

use super::integrate::Trajectory;
use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

fn hann(n: usize, len: usize) -> f64 {
    let x = (PI * n as f64 / (len - 1) as f64).sin();
    x * x
}

/// Angular frequency Ω with z(t) ≈ A·e^{−iΩt} for uniformly sampled z.
/// Hann-windowed zero-padded DFT peak, quadratic interpolation of the
/// log-magnitude, then a root solve of d|S(ν)|²/dν = 0 for the windowed sum S.
pub fn dominant_frequency(samples: &[Complex64], dt: f64, label: i64) -> Result<f64> {
    let n = samples.len();
    if n < 64 {
        return Err(Error::invalid(format!("frequency analysis needs ≥ 64 samples, got {n}")));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("sample spacing must be positive"));
    }
    let scale = samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::NoFrequency(label));
    }
    let weighted: Vec<Complex64> = samples.iter().enumerate().map(|(k, z)| z * hann(k, n)).collect();
    let len = (4 * n).next_power_of_two();
    let mut buf = weighted.clone();
    buf.resize(len, Complex64::default());
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let mags: Vec<f64> = buf.iter().map(|z| z.norm()).collect();
    let (peak, top) = mags
        .iter()
        .enumerate()
        .fold((0usize, 0.0f64), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
    let mean_mag = mags.iter().sum::<f64>() / len as f64;
    if !(top > 0.0) || top < 10.0 * mean_mag {
        return Err(Error::NoFrequency(label));
    }
    // bin k ↔ angular frequency ν with samples ∝ e^{iνt}
    let bin = 2.0 * PI / (len as f64 * dt);
    let lm = mags[(peak + len - 1) % len].max(1e-300).ln();
    let l0 = top.ln();
    let lp = mags[(peak + 1) % len].max(1e-300).ln();
    let denom = lm - 2.0 * l0 + lp;
    let shift = if denom.abs() > 0.0 { 0.5 * (lm - lp) / denom } else { 0.0 };
    let k_signed = if 2 * peak <= len { peak as f64 } else { peak as f64 - len as f64 };
    let nu0 = (k_signed + shift.clamp(-1.0, 1.0)) * bin;

    // d|S|²/dν = 2Re(conj(S)·S'), S(ν) = Σ w_k z_k e^{−iν t_k}
    let slope = |nu: f64| -> f64 {
        let mut s = Complex64::default();
        let mut ds = Complex64::default();
        for (k, z) in weighted.iter().enumerate() {
            let t = k as f64 * dt;
            let e = z * Complex64::from_polar(1.0, -nu * t);
            s += e;
            ds += e * Complex64::new(0.0, -t);
        }
        2.0 * (s.conj() * ds).re
    };
    let (mut a, mut c) = (nu0 - 2.0 * bin, nu0 + 2.0 * bin);
    let (mut fa, fc) = (slope(a), slope(c));
    let nu = if fa > 0.0 && fc < 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (a + c);
            if mid == a || mid == c {
                break;
            }
            let fm = slope(mid);
            if (fm > 0.0) == (fa > 0.0) {
                a = mid;
                fa = fm;
            } else {
                c = mid;
            }
        }
        0.5 * (a + c)
    } else {
        nu0
    };
    Ok(-nu)
}

/// Dominant frequency of t ↦ r̂_j(t) along a recorded trajectory.
pub fn extract_frequency(traj: &Trajectory, j: i64) -> Result<f64> {
    if traj.times.len() < 2 {
        return Err(Error::invalid("trajectory too short"));
    }
    let dt = traj.times[1] - traj.times[0];
    dominant_frequency(&traj.mode_series(j), dt.abs(), j).map(|w| if dt < 0.0 { -w } else { w })
}
