use thiserror::Error;

/// Errors raised by the solvers and oracles in this crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("profiles live on different grids")]
    GridMismatch,

    #[error("singular tridiagonal system: zero pivot at row {row}")]
    SingularSystem { row: usize },

    #[error("tridiagonal solve residual {residual:e} exceeds bound {bound:e}")]
    InaccurateSolve { residual: f64, bound: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("degenerate iterate at step {iteration}: {reason}")]
    DegenerateIterate { iteration: usize, reason: String },

    #[error("rescaling requires gamma > 0, got {gamma}")]
    RescaleDomain { gamma: f64 },

    #[error("no bracket found: {0}")]
    NoBracket(String),

    #[error("root not found: {0}")]
    RootNotFound(String),

    #[error("eigenvalue iteration failed (residual {residual:e})")]
    SpectralFailure { residual: f64 },

    #[error("ill-conditioned operator: {0}")]
    Conditioning(String),

    #[error("quadrature did not converge: {0}")]
    Integration(String),
}

pub type Result<T> = std::result::Result<T, Error>;
