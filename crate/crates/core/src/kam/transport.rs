use super::{default_indices, smooth_cutoff, truncation_schedule, ChangeOfVariables, CutMode, StepRecord};
use crate::error::{Error, Result};
use crate::spectral::{Coeffs, PeriodicField};
use num_complex::Complex64;

/// ω·∂_φ + (V₀ + f₀(φ,θ))∂_θ with the data of its reduction.
#[derive(Clone, Debug)]
pub struct TransportProblem {
    pub omega: Vec<f64>,
    pub base_speed: f64,
    pub perturbation: PeriodicField,
    pub gamma: f64,
    pub upsilon: f64,
    pub tau1: f64,
    pub n0: f64,
    /// largest accepted sup |f₀|
    pub max_perturbation: f64,
    /// iteration stops once sup |f_m| falls to this level
    pub stop_below: f64,
    pub s0: f64,
    pub sh: f64,
}

impl TransportProblem {
    pub fn new(omega: Vec<f64>, perturbation: PeriodicField, gamma: f64, upsilon: f64, tau1: f64) -> Result<Self> {
        let (s0, sh) = default_indices(perturbation.time_dims());
        let p = TransportProblem {
            omega,
            base_speed: 0.5,
            perturbation,
            gamma,
            upsilon,
            tau1,
            n0: 4.0,
            max_perturbation: 0.25,
            stop_below: f64::EPSILON * 0.5,
            s0,
            sh,
        };
        p.validate()?;
        Ok(p)
    }

    /// γ^υ.
    pub fn height(&self) -> f64 {
        self.gamma.powf(self.upsilon)
    }

    fn time_reach(&self) -> i64 {
        let d = self.perturbation.time_dims();
        self.perturbation.shape()[..d].iter().map(|&n| n as i64 / 2 - 1).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let f = &self.perturbation;
        let d = f.time_dims();
        if d == 0 || self.omega.len() != d {
            return Err(Error::invalid(format!(
                "frequency vector of length {} for {d} time dimensions",
                self.omega.len()
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) || !(self.upsilon > 0.0) || !(self.tau1 > 0.0) {
            return Err(Error::invalid("need 0 < γ < 1, υ > 0, τ₁ > 0"));
        }
        if !(self.n0 > 1.0) {
            return Err(Error::invalid("N₀ must exceed 1"));
        }
        if !(self.stop_below >= 0.0) {
            return Err(Error::invalid("stopping level must be non-negative"));
        }
        if !(self.base_speed > 0.0) {
            return Err(Error::invalid("base speed must be positive"));
        }
        let size = f.linf();
        if size > self.max_perturbation {
            return Err(Error::invalid(format!(
                "sup |f₀| = {size:.3e} above the accepted {:.3e}",
                self.max_perturbation
            )));
        }
        let asym = (&f.reflect() - f).linf();
        if asym > 1e-12 * size.max(1.0) {
            return Err(Error::invalid(format!("f₀(−φ,−θ) ≠ f₀(φ,θ) (defect {asym:.3e})")));
        }
        let modes = f.coeffs().modes();
        for (l, _, ny) in &modes {
            if *ny || l.iter().all(|&x| x == 0) {
                continue;
            }
            let w: f64 = l.iter().zip(&self.omega).map(|(&a, &o)| a as f64 * o).sum();
            if w.abs() < 1e-12 {
                return Err(Error::invalid(format!("ω·l vanishes at l = {l:?}")));
            }
        }
        Ok(())
    }
}

/// Result of the straightening iteration.
#[derive(Clone, Debug)]
pub struct TransportOutcome {
    /// estimate of the constant speed V^∞
    pub speed: f64,
    pub change: ChangeOfVariables,
    pub history: Vec<StepRecord>,
    /// cut modes by step
    pub cuts: Vec<Vec<CutMode>>,
    /// sup |f| left after the last step
    pub residual: f64,
}

impl TransportOutcome {
    /// No divisor was cut at any step.
    pub fn in_cantor_set(&self) -> bool {
        self.cuts.iter().all(|c| c.is_empty())
    }

    /// Norm sequence ‖f_m‖_{s₀} including the final residual.
    pub fn deltas(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.delta_s0).collect()
    }
}

/// 𝓑⁻¹(ω·∂_φβ + (c + f)(1 + ∂_θβ)) − c: the new ∂_θ coefficient read off the θ-linear probe,
/// minus the constant c. Constants commute with 𝓑, so c is split off before composing.
fn conjugated_speed(change: &ChangeOfVariables, omega: &[f64], c: f64, f: &PeriodicField) -> Result<PeriodicField> {
    let beta = change.beta();
    let bt = beta.derivative_theta();
    let image = &(&beta.directional_phi(omega)? + &bt.scale(c)) + &(f * &bt.map(|v| 1.0 + v));
    change.compose_inverse(&image, false)
}

fn record(step: usize, n: i64, f: &PeriodicField, p: &TransportProblem, cut: f64, speed: f64) -> StepRecord {
    StepRecord {
        step,
        truncation: n,
        delta_s0: f.sobolev_norm(p.s0),
        delta_sh: f.sobolev_norm(p.sh),
        cut_fraction: cut,
        speed,
    }
}

/// Iterative straightening: each step solves (ω·∂_φ + V_m∂_θ)β_m = ⟨f_m⟩ − f_m mode by mode
/// on |l|₁ ≤ N_m with the χ cut-off, then re-reads the speed from the conjugated operator.
/// Runs at most `steps` steps, fewer once f_m is below `stop_below`.
pub fn straighten_transport(problem: &TransportProblem, steps: usize) -> Result<TransportOutcome> {
    problem.validate()?;
    let shape = problem.perturbation.shape().to_vec();
    let omega = &problem.omega;
    let height = problem.height();
    let mut speed = problem.base_speed;
    // Nyquist slots lie outside the truncation and are never solved for
    let band = problem.perturbation.max_bracket();
    let mut f = problem.perturbation.project(band)?;
    let mut total = ChangeOfVariables::identity(&shape)?;
    let mut history = Vec::new();
    let mut cuts = Vec::new();
    let mut taken = 0;
    for m in 0..steps {
        if f.linf() <= problem.stop_below {
            break;
        }
        taken += 1;
        let n = truncation_schedule(problem.n0, m).min(problem.time_reach());
        let c = f.coeffs();
        let mean = c.get(&vec![0; omega.len()], 0).re;
        let mut beta = Coeffs::zeros(&shape)?;
        let mut cut = Vec::new();
        let mut considered = 0usize;
        for (l, j, ny) in c.modes() {
            let l1: i64 = l.iter().map(|x| x.abs()).sum();
            if ny || (l1 == 0 && j == 0) || l1 > n {
                continue;
            }
            considered += 1;
            let w: f64 = l.iter().zip(omega).map(|(&a, &o)| a as f64 * o).sum();
            let div = w + j as f64 * speed;
            let threshold = height * j.abs().max(1) as f64 / (l1.max(1) as f64).powf(problem.tau1);
            let chi = smooth_cutoff(div / threshold);
            if chi < 1.0 {
                cut.push(CutMode {
                    l: l.clone(),
                    j,
                    j0: None,
                    divisor: div,
                    chi,
                });
            }
            if chi > 0.0 {
                beta.set(&l, j, -c.get(&l, j) * chi / Complex64::new(0.0, div))?;
            }
        }
        let fraction = if considered == 0 { 0.0 } else { cut.len() as f64 / considered as f64 };
        history.push(record(m, n, &f, problem, fraction, speed));
        if fraction > 0.5 {
            return Err(Error::NonReducible(format!(
                "{} of {considered} divisors cut at step {m} (N = {n})",
                cut.len()
            )));
        }
        cuts.push(cut);
        let change = ChangeOfVariables::new(beta.to_field()?)?;
        let next = conjugated_speed(&change, omega, speed, &f)?;
        speed += mean;
        f = next.map(|v| v - mean).project(band)?;
        total = total.then(&change)?;
    }
    let n = truncation_schedule(problem.n0, taken).min(problem.time_reach());
    history.push(record(taken, n, &f, problem, 0.0, speed));
    Ok(TransportOutcome {
        speed: speed + f.mean(),
        change: total,
        history,
        cuts,
        residual: f.linf(),
    })
}

/// sup |𝓑⁻¹(ω·∂_φβ + (V₀+f₀)(1+∂_θβ)) − V^∞| for the accumulated change.
pub fn straightening_defect(problem: &TransportProblem, outcome: &TransportOutcome) -> Result<f64> {
    let out = conjugated_speed(&outcome.change, &problem.omega, problem.base_speed, &problem.perturbation)?;
    let shift = outcome.speed - problem.base_speed;
    Ok(out.map(|v| v - shift).linf())
}

#[cfg(test)]
mod tests {
    use super::super::{default_frequency, superlinear_slope};
    use super::*;

    fn harmonic_mean(a: f64, b: f64) -> f64 {
        // trapezoid on a periodic analytic integrand, independent of the FFT machinery
        let n = 4096;
        let avg: f64 = (0..n)
            .map(|k| 1.0 / (a + b * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()))
            .sum::<f64>()
            / n as f64;
        1.0 / avg
    }

    #[test]
    fn zero_perturbation() {
        let f = PeriodicField::zeros(&[4, 32]).unwrap();
        let p = TransportProblem::new(default_frequency(1).unwrap(), f, 1e-3, 1.0 / 9.0, 5.0).unwrap();
        let out = straighten_transport(&p, 3).unwrap();
        assert_eq!(out.speed, 0.5);
        assert_eq!(out.change.beta().linf(), 0.0);
    }

    #[test]
    fn theta_only_speed_is_the_harmonic_mean() {
        let oracle = harmonic_mean(0.5, 0.1);
        assert!((oracle - 0.24f64.sqrt()).abs() < 1e-14);
        let f = PeriodicField::from_fn(&[4, 64], |_, t| 0.1 * t.cos()).unwrap();
        let p = TransportProblem::new(default_frequency(1).unwrap(), f, 1e-3, 1.0 / 9.0, 5.0).unwrap();
        let out = straighten_transport(&p, 8).unwrap();
        assert!((out.speed - oracle).abs() < 1e-8, "{} vs {oracle}", out.speed);
        assert!(out.residual < 1e-10);
        assert!(straightening_defect(&p, &out).unwrap() < 1e-9);
    }

    #[test]
    fn small_perturbation_converges_superlinearly() {
        let f = PeriodicField::from_fn(&[16, 64], |p, t| 1e-3 * (t.cos() + 0.5 * (p[0] - 2.0 * t).cos())).unwrap();
        let scale = 1e-3 / f.sobolev_norm(default_indices(1).0);
        let f = f.scale(scale);
        // γ small enough that no divisor on the lattice is cut
        let p = TransportProblem::new(default_frequency(1).unwrap(), f, 1e-6, 1.0 / 9.0, 5.0).unwrap();
        let out = straighten_transport(&p, 4).unwrap();
        assert!(out.in_cantor_set());
        let deltas = out.deltas();
        assert!((deltas[0] - 1e-3).abs() < 1e-15);
        let slope = superlinear_slope(&deltas[..4]).unwrap();
        assert!(slope >= 1.4, "slope {slope} over {deltas:?}");
        assert!(straightening_defect(&p, &out).unwrap() < 1e-12);
    }

    #[test]
    fn cut_modes_are_logged() {
        let f = PeriodicField::from_fn(&[8, 32], |p, t| 1e-3 * (p[0] + t).cos()).unwrap();
        // ω = V₀ makes l = 1, j = −1 exactly resonant
        let p = TransportProblem::new(vec![0.5], f, 1e-3, 1.0 / 9.0, 5.0).unwrap();
        let out = straighten_transport(&p, 1).unwrap();
        assert!(!out.in_cantor_set());
        assert!(out.cuts[0].iter().any(|c| c.l == vec![1] && c.j == -1 && c.chi == 0.0));
    }

    #[test]
    fn divisor_catastrophe_is_reported() {
        let f = PeriodicField::from_fn(&[8, 32], |p, t| 1e-3 * (p[0] + t).cos()).unwrap();
        let mut p = TransportProblem::new(vec![0.5], f, 0.9, 1.0, 0.0001).unwrap();
        // slow transport: every θ-mode divisor falls below its height
        p.base_speed = 0.1;
        assert!(matches!(straighten_transport(&p, 2), Err(Error::NonReducible(_))));
    }

    #[test]
    fn rejects_bad_problems() {
        let f = PeriodicField::from_fn(&[4, 32], |_, t| 0.1 * t.sin()).unwrap();
        assert!(TransportProblem::new(vec![0.2], f, 1e-3, 0.1, 5.0).is_err());
        let big = PeriodicField::from_fn(&[4, 32], |_, t| 0.4 * t.cos()).unwrap();
        assert!(TransportProblem::new(vec![0.2], big, 1e-3, 0.1, 5.0).is_err());
        let g = PeriodicField::from_fn(&[4, 32], |_, t| 0.1 * t.cos()).unwrap();
        assert!(TransportProblem::new(vec![0.2, 0.3], g.clone(), 1e-3, 0.1, 5.0).is_err());
        assert!(TransportProblem::new(vec![0.0], g, 1e-3, 0.1, 5.0).is_err());
    }
}
