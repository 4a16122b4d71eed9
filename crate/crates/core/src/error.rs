use thiserror::Error;

/// Errors raised by the numerical kernels and model layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: String, found: String },

    #[error("iteration limit reached after {iterations} iterations ({converged} of {total} eigenvalues converged)")]
    NoConvergence {
        iterations: usize,
        converged: usize,
        total: usize,
        /// Eigenvalues that had deflated before the limit, as (re, im).
        partial: Vec<(f64, f64)>,
    },

    #[error("unstable: largest real part of the fluctuation spectrum is {max_real_part:e}")]
    Unstable { max_real_part: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("evaluation at a pole (omega = {omega})")]
    Pole { omega: f64 },

    #[error("bracketing failed: {0}")]
    Bracketing(String),
}

pub type Result<T> = std::result::Result<T, Error>;
