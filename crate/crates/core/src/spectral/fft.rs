//! Multi-dimensional FFT over row-major grids (last axis fastest).

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Signed wavenumber of storage index `i` on an axis of `n` points.
/// The Nyquist slot maps to `n/2`.
pub fn wavenumber(i: usize, n: usize) -> i64 {
    if 2 * i <= n {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Storage index of wavenumber `k` (any integer, reduced mod n).
pub fn slot(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

pub fn is_nyquist(i: usize, n: usize) -> bool {
    n % 2 == 0 && 2 * i == n
}

/// In-place unnormalized transform along every axis.
pub fn fft_nd(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let total: usize = shape.iter().product();
    debug_assert_eq!(total, data.len());
    let mut stride = 1usize;
    for axis in (0..shape.len()).rev() {
        let n = shape[axis];
        if n > 1 {
            let fft = if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            };
            transform_axis(data, n, stride, &fft);
        }
        stride *= n;
    }
}

fn transform_axis(data: &mut [Complex64], n: usize, stride: usize, fft: &Arc<dyn Fft<f64>>) {
    let total = data.len();
    if stride == 1 {
        fft.process(data);
        return;
    }
    let block = n * stride;
    let mut line = vec![Complex64::default(); n];
    for outer in (0..total).step_by(block) {
        for inner in 0..stride {
            let base = outer + inner;
            for (k, v) in line.iter_mut().enumerate() {
                *v = data[base + k * stride];
            }
            fft.process(&mut line);
            for (k, v) in line.iter().enumerate() {
                data[base + k * stride] = *v;
            }
        }
    }
}

/// Reusable 1-D plan pair for hot loops.
#[derive(Clone)]
pub struct Plan1d {
    pub n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plan1d {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        Plan1d {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Normalized forward transform: returns the Fourier coefficients.
    pub fn coeffs(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Synthesis from coefficients, keeping the real part.
    pub fn synth_real(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inverse.process(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }
}
