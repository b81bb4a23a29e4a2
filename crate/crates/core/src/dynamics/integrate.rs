//! RK4 time stepping of ∂_t r = −F_b[r] with conservation diagnostics.

use super::functional::{disc_energy, energy_increment, velocity_functional};
use crate::error::{Error, Result};
use crate::geometry::PatchState;
use crate::spectral::PeriodicField;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Time-stepping parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    /// θ-grid size
    pub m: usize,
    pub record_stride: usize,
    /// integrate towards negative times
    pub backward: bool,
    /// 2/3-rule truncation after each step
    pub dealias: bool,
    /// Sobolev index of the recorded norm
    pub sobolev_s: f64,
    /// path nodes for the Hamiltonian diagnostic (0 disables it)
    pub energy_nodes: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            dt: 1e-3,
            t_final: 5.0,
            m: 64,
            record_stride: 10,
            backward: false,
            dealias: true,
            sobolev_s: 1.0,
            energy_nodes: 6,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_final >= self.dt) {
            return Err(Error::invalid("final time must be at least one step"));
        }
        if self.m < 8 || !self.m.is_power_of_two() {
            return Err(Error::invalid(format!("grid size {} must be a power of two ≥ 8", self.m)));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("record stride must be positive"));
        }
        Ok(())
    }

    /// Number of steps taken.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt * (1.0 + 1e-12)).floor() as usize
    }
}

/// Recorded evolution.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub b: f64,
    pub times: Vec<f64>,
    pub snapshots: Vec<PeriodicField>,
    pub means: Vec<f64>,
    /// H(r(t)) − H(0) per snapshot, computed without cancellation against H(0)
    pub hamiltonian_increments: Vec<f64>,
    pub hamiltonians: Vec<f64>,
    pub sobolev_norms: Vec<f64>,
}

impl Trajectory {
    /// Complex Fourier coefficient r̂_j(t) at every snapshot.
    pub fn mode_series(&self, j: i64) -> Vec<Complex64> {
        self.snapshots.iter().map(|s| s.coeffs().get(&[], j)).collect()
    }

    pub fn mean_drift(&self) -> f64 {
        self.means.iter().map(|m| (m - self.means[0]).abs()).fold(0.0, f64::max)
    }

    /// max_t |H(t) − H(0)| / |H(0)|.
    pub fn relative_hamiltonian_drift(&self) -> f64 {
        let h0 = self.hamiltonians[0].abs();
        let base = self.hamiltonian_increments[0];
        self.hamiltonian_increments.iter().map(|h| (h - base).abs()).fold(0.0, f64::max) / h0
    }

    pub fn final_state(&self) -> Result<PatchState> {
        PatchState::new(self.b, self.snapshots.last().unwrap().clone())
    }
}

fn admissible(b: f64, r: PeriodicField) -> Result<PatchState> {
    let s = PatchState::new(b, r)?;
    s.check_inside_disc()?;
    Ok(s)
}

/// One classical RK4 step of size dt (dt may be negative).
pub fn step(state: &PatchState, dt: f64) -> Result<PatchState> {
    let b = state.b();
    let r0 = state.r();
    let rhs = |s: &PatchState| -> Result<PeriodicField> { Ok(velocity_functional(s)?.scale(-1.0)) };
    let k1 = rhs(state)?;
    let k2 = rhs(&admissible(b, r0 + &k1.scale(dt / 2.0))?)?;
    let k3 = rhs(&admissible(b, r0 + &k2.scale(dt / 2.0))?)?;
    let k4 = rhs(&admissible(b, r0 + &k3.scale(dt))?)?;
    let incr = &(&k1 + &k4) + &(&k2 + &k3).scale(2.0);
    let incr = PeriodicField::new(
        incr.shape().to_vec(),
        incr.values()
            .iter()
            .zip(k2.values().iter().zip(k3.values()))
            .zip(k1.values().iter().zip(k4.values()))
            .map(|((_, (b2, b3)), (a1, a4))| (a1 + 2.0 * b2 + 2.0 * b3 + a4) * dt / 6.0)
            .collect(),
    )?;
    admissible(b, r0 + &incr)
}

/// Integrate from `state` and record diagnostics every `record_stride` steps.
pub fn simulate(state: &PatchState, config: &EvolutionConfig) -> Result<Trajectory> {
    config.validate()?;
    if state.m() != config.m {
        return Err(Error::invalid(format!(
            "state grid {} differs from configured grid {}",
            state.m(),
            config.m
        )));
    }
    state.check_inside_disc()?;
    let dt = if config.backward { -config.dt } else { config.dt };
    let b = state.b();
    let h0 = -0.5 * disc_energy(b);
    let mut traj = Trajectory {
        b,
        times: Vec::new(),
        snapshots: Vec::new(),
        means: Vec::new(),
        hamiltonian_increments: Vec::new(),
        hamiltonians: Vec::new(),
        sobolev_norms: Vec::new(),
    };
    let record = |t: f64, s: &PatchState, traj: &mut Trajectory| -> Result<()> {
        let inc = if config.energy_nodes > 0 {
            -0.5 * energy_increment(s, config.energy_nodes)?
        } else {
            f64::NAN
        };
        traj.times.push(t);
        traj.means.push(s.r().mean());
        traj.hamiltonian_increments.push(inc);
        traj.hamiltonians.push(h0 + inc);
        traj.sobolev_norms.push(s.r().sobolev_norm(config.sobolev_s));
        traj.snapshots.push(s.r().clone());
        Ok(())
    };
    let mut current = state.clone();
    record(0.0, &current, &mut traj)?;
    for n in 1..=config.steps() {
        let t = n as f64 * dt;
        let next = step(&current, dt).and_then(|s| {
            if config.dealias {
                admissible(b, s.r().dealias(2.0 / 3.0))
            } else {
                Ok(s)
            }
        });
        current = match next {
            Ok(s) => s,
            Err(e) => {
                return Err(Error::Aborted {
                    time: t - dt,
                    reason: e.to_string(),
                    last_valid: current.r().values().to_vec(),
                })
            }
        };
        if n % config.record_stride == 0 {
            record(t, &current, &mut traj)?;
        }
    }
    Ok(traj)
}

/// r₀(θ) = Σ a_j cos(jθ) over the tangential sites.
pub fn quasi_periodic_seed(b: f64, amplitudes: &[(i64, f64)], m: usize) -> Result<PatchState> {
    if amplitudes.iter().any(|(j, _)| *j <= 0) {
        return Err(Error::invalid("tangential sites must be positive integers"));
    }
    if amplitudes.iter().any(|(j, _)| 2 * *j as usize >= m) {
        return Err(Error::invalid("tangential site beyond grid truncation"));
    }
    let total: f64 = amplitudes.iter().map(|(_, a)| a.abs()).sum();
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::invalid(format!("radius parameter b = {b} outside (0,1)")));
    }
    if total >= crate::geometry::ADMISSIBLE_FRACTION * b * b / 2.0 {
        return Err(Error::DegeneratePatch(format!("seed amplitude {total:.3e} too large for b = {b}")));
    }
    let r = PeriodicField::from_fn_theta(m, |t| amplitudes.iter().map(|&(j, a)| a * (j as f64 * t).cos()).sum())?;
    PatchState::new(b, r)
}
