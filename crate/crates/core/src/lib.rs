//! Exact newform coefficients and the additive-basis pipeline built on them:
//! sign and density scans, admissible prime sets, Waring-Goldbach
//! representations, and verified decompositions `Z = sum a(n_j)`.

pub mod admissible;
pub mod coeffs;
pub mod decompose;
mod error;
pub mod par;
pub mod primes;
pub mod signs;
pub mod waring;

pub use error::{Error, Result};
