//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Dimension or shape mismatch between operands.
    #[error("shape error: {0}")]
    Shape(String),

    /// Unknown, duplicate or otherwise unusable subsystem label.
    #[error("label error: {0}")]
    Label(String),

    /// Caller-supplied data violates a precondition.
    #[error("input error: {0}")]
    Input(String),

    /// A physical invariant does not hold (trace, positivity, normalization).
    #[error("consistency error: {0}")]
    Consistency(String),

    /// A declared witness or protocol step fails its contract.
    #[error("contract error: {0}")]
    Contract(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
