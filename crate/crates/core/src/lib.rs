//! Numerical kernels for the periodic mu-family of shallow-water equations
//! `m_t + u m_x + lambda u_x m = 0`, `m = (mu - d_x^2) u`.

pub mod blowup;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod field;
pub mod geometry;
pub mod operator;
pub mod peakon;
mod stepper;

pub use error::{Error, Result};
pub use evolution::{evolve, ModelParams, SolutionRecord, SolverConfig, Termination};
pub use field::{ConstantRule, PeriodicField, PeriodicGrid};
