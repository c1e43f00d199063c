//! Numerical model of a causal two-mode optical system: a birefringent slab
//! between two linear polarizers.
//!
//! * [`numerics`]: frequency grids, phase unwrapping, principal-value integrals.
//! * [`model`]: transfer function, group delay, half-waveplate frequencies and
//!   complex zeros of the slab-plus-polarizer system.
//! * [`kk`]: truncated Kramers-Kronig transforms, amplitude-to-phase
//!   reconstruction and all-pass correction for upper-half-plane zeros.
//! * [`pulse`]: spectral pulse propagation, peak timing and front causality.

pub mod error;
pub mod kk;
pub mod model;
pub mod numerics;
pub mod pulse;

pub use error::{Error, Result};
pub use num_complex::Complex64;
