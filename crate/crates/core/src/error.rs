use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected n={expected}, found n={found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate truncation: no usable probability mass on ({lo}, {hi})")]
    DegenerateTruncation { lo: f64, hi: f64 },

    #[error("undefined quantity: {0}")]
    Undefined(&'static str),

    #[error("trace holds no posterior samples")]
    EmptyTrace,

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid_param(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn parse_error(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}
