//! Periodic fields, Fourier calculus and truncated operator matrices.

pub mod fft;
mod field;
mod operator;

pub use field::{bracket, symplectic_pairing, Coeffs, PeriodicField};
pub use operator::{box_index, box_len, box_point, symmetric_modes, LinearOperatorMatrix};
