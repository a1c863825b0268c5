use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("circuit width {width} exceeds simulator cap {cap}")]
    WidthOverCap { width: usize, cap: usize },

    #[error("gate {0} cannot be decomposed to the native set")]
    NotDecomposable(String),

    #[error("degenerate gamma: zero variance in {0}")]
    DegenerateGamma(String),

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("labels contain a single class")]
    SingleClass,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("malformed kernel file: {0}")]
    MalformedKernel(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
