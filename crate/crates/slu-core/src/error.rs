//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by corpus handling, alignment, models, and metrics.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed corpus line; carries the 1-based line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Two corpus records share an id.
    #[error("duplicate utterance id: {0}")]
    DuplicateId(String),

    /// A precondition on the input data was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Tensor or sequence dimensions disagree.
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    /// An evaluation was asked for an utterance with no system output.
    #[error("missing system output for utterance id: {0}")]
    MissingOutput(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
