//! Quantum work statistics for driven finite-dimensional systems measured
//! through a squeezed harmonic-oscillator detector.

pub mod cli;
pub mod detector;
pub mod error;
pub mod numerics;
pub mod protocol;
pub mod quadrature;
pub mod spin;
pub mod state;
pub mod work;

pub use error::{Error, Result};
