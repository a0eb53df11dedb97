//! Error types shared by every module in the crate.

use thiserror::Error;

/// Errors produced by graph construction, model evaluation, and bound
/// computation.
#[derive(Error, Debug)]
pub enum Error {
    /// Shape or dimension mismatch between operands.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An argument violates a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// A matrix contains (or an operation would produce) NaN/Inf entries.
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    /// Requested matrix exceeds the configured maximum side length.
    #[error("matrix size {rows}x{cols} exceeds the {limit} per-side limit")]
    SizeLimit { rows: usize, cols: usize, limit: usize },

    /// Text input (edge list, model file) failed to parse.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An iterative kernel failed to converge.
    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
