//! Numerical laboratory for generalized Nyman-Beurling bases.
//!
//! The crate builds the basis families (classical dilations, inverse-Gamma
//! convolutions, recursive Euler-operator families), computes their Gram
//! systems and best-approximation distances by two independent routes, and
//! exposes the numerical building blocks used for that.

pub mod algebra;
pub mod family_classical;
pub mod family_invgamma;
pub mod family_recursive;
pub mod mc;
pub mod oracles;
pub mod quad;
pub mod report;
pub mod solver;
pub mod verify;
pub mod specfun;

pub use num_complex::Complex64;
