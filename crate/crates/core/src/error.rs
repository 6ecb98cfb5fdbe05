//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("state not normalized: |norm - 1| = {defect:e}")]
    NotNormalized { defect: f64 },

    #[error("degenerate input: both detuning and Rabi frequency are zero")]
    DegenerateInput,

    #[error("empty time grid")]
    EmptyGrid,

    #[error("integration failure at t = {t} us: {reason}")]
    IntegrationFailure { t: f64, reason: String },

    #[error("quadrature did not converge on [{a}, {b}] (error estimate {estimate:e})")]
    QuadratureFailure { a: f64, b: f64, estimate: f64 },

    #[error("density matrix positivity violation: min eigenvalue {min_eigenvalue:e}")]
    PositivityViolation { min_eigenvalue: f64 },

    #[error("reference-unitary checksum mismatch: {left} vs {right}")]
    ChecksumMismatch { left: String, right: String },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal {offdiag:e})")]
    EigenFailure { sweeps: usize, offdiag: f64 },
}

pub type Result<T> = std::result::Result<T, SimError>;

impl SimError {
    pub fn config(msg: impl Into<String>) -> Self {
        SimError::Config(msg.into())
    }
}
