use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, MdError>;

/// Errors raised by the library.
///
/// The CLI maps [`MdError::InvariantViolation`] and [`MdError::MissingSolution`]
/// to exit code 1 and every other variant to exit code 2.
#[derive(Debug, Error)]
pub enum MdError {
    #[error("input error: {0}")]
    Input(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("degenerate constants: {0}")]
    Degenerate(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("known solution required: {0}")]
    MissingSolution(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl MdError {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        MdError::Input(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        MdError::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        MdError::Precondition(msg.into())
    }
}

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(MdError::input(format!("{what}: entry {i} is not finite"))),
        None => Ok(()),
    }
}
