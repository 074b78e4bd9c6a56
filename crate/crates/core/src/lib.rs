//! Numerical laboratory for linearized shear-flow dynamics on the truncated
//! line: profile hypothesis checks, the symmetrized generator `H = S U S`,
//! localized commutator positivity, inviscid/viscous propagation, and the
//! decay-rate and enhanced-dissipation measurements built on top of them.

pub mod discretization;
pub mod evolution;
pub mod observables;
pub mod operators;
pub mod spectral;
pub mod error;
pub mod linalg;
pub mod profiles;

pub use error::{CoreError, Result};
