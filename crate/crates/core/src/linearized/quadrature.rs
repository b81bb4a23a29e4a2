//! Normalized quadrature of the two logarithmic multiplier integrals.

use crate::error::{Error, Result};
use gauss_quad::GaussLegendre;
use std::f64::consts::PI;
use std::num::NonZeroUsize;

/// Sidi-type periodizing map ψ(t) with ψ' ∝ sin^{2p}(πt), returned as (ψ, ψ').
/// The incomplete integral is evaluated by Gauss–Legendre on [0, t], which keeps full
/// relative accuracy near t = 0 where ψ ~ t^{2p+1}.
struct SidiMap {
    p: i32,
    norm: f64,
    rule: Vec<(f64, f64)>,
}

impl SidiMap {
    fn new(p: i32) -> Self {
        // ∫₀¹ sin^{2p}(πs) ds = C(2p,p)/4^p
        let central = (0..p).fold(1.0, |acc, i| acc * (2 * p - i) as f64 / (i + 1) as f64);
        let rule = GaussLegendre::new(NonZeroUsize::new(24).unwrap()).as_node_weight_pairs().to_vec();
        SidiMap { p, norm: central / 4f64.powi(p), rule }
    }

    fn eval(&self, t: f64) -> (f64, f64) {
        let f = |s: f64| (PI * s).sin().powi(2 * self.p);
        let integral: f64 = self.rule.iter().map(|&(x, w)| 0.5 * t * w * f(0.5 * t * (x + 1.0))).sum();
        (integral / self.norm, f(t) / self.norm)
    }
}

/// (1/2π)∫₀^{2π} log(sin²(η/2)) cos(jη) dη with `nodes` transformed trapezoid points.
pub fn log_sine_moment(j: i64, nodes: usize) -> Result<f64> {
    if nodes < 8 || nodes % 2 != 0 {
        return Err(Error::invalid("need an even number (≥ 8) of quadrature nodes"));
    }
    let map = SidiMap::new(3);
    let h = 1.0 / nodes as f64;
    // the transformed integrand is symmetric about t = 1/2
    let value = |t: f64| -> f64 {
        let (psi, dpsi) = map.eval(t);
        let s = (PI * psi).sin();
        (s * s).ln() * (2.0 * PI * j as f64 * psi).cos() * dpsi
    };
    let half = nodes / 2;
    let mut acc = value(0.5);
    for k in 1..half {
        acc += 2.0 * value(k as f64 * h);
    }
    Ok(acc * h)
}

/// (1/2π)∫₀^{2π} log|1 − b²e^{iη}| cos(jη) dη by the trapezoid rule (smooth periodic integrand).
pub fn image_log_moment(b: f64, j: i64, nodes: usize) -> Result<f64> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::invalid(format!("b = {b} outside (0,1)")));
    }
    if nodes < 8 {
        return Err(Error::invalid("need at least 8 quadrature nodes"));
    }
    let b2 = b * b;
    let acc: f64 = (0..nodes)
        .map(|k| {
            let eta = 2.0 * PI * k as f64 / nodes as f64;
            let s = (eta / 2.0).sin();
            0.5 * ((1.0 - b2) * (1.0 - b2) + 4.0 * b2 * s * s).ln() * (j as f64 * eta).cos()
        })
        .sum();
    Ok(acc / nodes as f64)
}
