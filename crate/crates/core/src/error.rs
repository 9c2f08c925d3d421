use thiserror::Error;

/// Errors produced by the model, training and measurement code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite input")]
    NonFinite,
    #[error("domain violation: {0} lies outside [0, 1]")]
    Domain(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("empty sample set")]
    EmptySamples,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
