//! Radial ground states of the power and logarithmic nonlinear Schrödinger
//! equations near the endpoint powers.
//!
//! The crate provides a staggered radial finite-difference grid, tridiagonal
//! solvers, closed-form reference profiles, two normalized gradient flows,
//! a shooting method used as an independent oracle, and spectral and
//! Pohozaev diagnostics.

pub mod closed_forms;
pub mod diagnostics;
pub mod error;
pub mod flows;
pub mod grid;
pub mod quadrature;
pub mod shooting;
pub mod tridiag;

#[cfg(test)]
mod properties;

pub use error::{Error, Result};
pub use flows::{linf_flow, linf_step, nehari_flow, nehari_step, rescale_fixed_point, FlowConfig, FlowResult};
pub use grid::{unit_sphere_area, MonotoneCubic, RadialProfile, StaggeredGrid};
pub use tridiag::{assemble_operator, Potential, TridiagonalOperator};
