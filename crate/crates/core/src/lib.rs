//! Time-dependent Darboux partners of the parametric harmonic oscillator.

pub mod checks;
pub mod classical;
pub mod coherent;
pub mod darboux;
pub mod error;
pub mod hg_modes;
mod integrate;
pub mod specfun;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
