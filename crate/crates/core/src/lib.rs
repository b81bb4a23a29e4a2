//! Vortex-patch boundary dynamics in the unit disc: pseudo-spectral evaluation,
//! linearization, small-divisor measure estimates and finite KAM reduction.

pub mod error;
pub mod dynamics;
pub mod geometry;
pub mod spectral;
pub mod linearized;
pub mod spectrum;
pub mod cantor;
pub mod kam;

pub use error::{Error, Result};
