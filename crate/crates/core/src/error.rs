//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-contract input (shape mismatch, non-finite
    /// entries, invalid ranges).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An iterative numeric routine failed to converge.
    #[error("numeric failure after {iterations} iterations: {msg}")]
    Numeric { msg: String, iterations: usize },

    /// A time integration or training run produced non-finite state.
    #[error("divergence at step {step}: {msg}")]
    Divergence { msg: String, step: usize },

    /// A column was constant where a spread is required.
    #[error("degenerate column {column}: {msg}")]
    DegenerateColumn { column: usize, msg: String },

    /// Text or binary decoding failed.
    #[error("parse error at line {line}: {msg}")]
    Parse { msg: String, line: usize },

    /// A linear system is too ill-conditioned to solve reliably.
    #[error("ill-conditioned system (condition number {cond:.3e})")]
    Conditioning { cond: f64 },

    /// A configuration that is representable but intentionally unsupported.
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
