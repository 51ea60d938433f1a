//! Exact symbolic dynamics of the Fibonacci substitution H: 0 → 01, 1 → 0:
//! golden-ratio arithmetic, the Fibonacci subshift K, distance to K, the
//! renormalization operator on potentials, and pressure of the induced
//! first-return system.

pub mod error;
pub mod fibword;
pub mod golden;
pub mod metric;
pub mod par;
pub mod renorm;
pub mod thermo;

pub use error::{Error, Result};
