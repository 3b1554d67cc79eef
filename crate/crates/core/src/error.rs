use thiserror::Error;

/// Errors produced by the evaluation library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Input violated a documented precondition (empty series, non-binary
    /// label, out-of-range parameter, length mismatch, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// The quantity is mathematically undefined for this input, e.g. AUC-ROC
    /// on single-class labels. Callers report it as an absent value.
    #[error("undefined: {0}")]
    Undefined(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
