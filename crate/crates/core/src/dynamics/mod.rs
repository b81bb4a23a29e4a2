//! Nonlinear contour dynamics of the patch boundary.

mod frequency;
mod functional;
mod integrate;

pub use frequency::{dominant_frequency, extract_frequency};
pub use functional::{
    disc_energy, energy, energy_increment, hamiltonian, stream_gradient, transport_coefficient,
    velocity_functional, DEFAULT_ENERGY_NODES,
};
pub use integrate::{quasi_periodic_seed, simulate, step, EvolutionConfig, Trajectory};
