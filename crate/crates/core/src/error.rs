use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid static configuration: incompatible shapes, unknown tags.
    #[error("configuration error: {0}")]
    Config(String),

    /// Caller misuse of an API contract (e.g. non-scalar loss, batch of one).
    #[error("usage error: {0}")]
    Usage(String),

    /// Data outside the documented domain of an operation.
    #[error("input error: {0}")]
    Input(String),

    /// Malformed external file.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A training run hit non-finite values and was stopped.
    #[error("run aborted at step {step}: {message}")]
    Aborted { step: u64, message: String },

    /// A metric could not be computed on the given representation.
    #[error("metric error: {0}")]
    Metric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
    pub fn metric(msg: impl Into<String>) -> Self {
        Error::Metric(msg.into())
    }
}
