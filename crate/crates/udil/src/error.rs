//! Crate-wide error type.

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A demonstration or embedding file could not be parsed.
    /// `line` is 1-based; 0 means the position is not line-addressable.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Input data violates a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// Vector/matrix dimensions do not line up.
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimMismatch {
        expected: usize,
        got: usize,
        context: String,
    },

    /// A non-finite value appeared where finite arithmetic is required.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// Bad configuration (rates, sizes, probabilities out of range).
    #[error("config error: {0}")]
    Config(String),

    /// A training run produced a non-finite loss and was aborted.
    #[error("numeric abort at iteration {iter}: {msg}")]
    NumericAbort { iter: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub fn dim(expected: usize, got: usize, context: impl Into<String>) -> Self {
        Error::DimMismatch {
            expected,
            got,
            context: context.into(),
        }
    }
}
