use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no direction: the zero vector does not span a line")]
    NoDirection,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dimension {0}: {1}")]
    InvalidDimension(usize, &'static str),

    #[error("scale h must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("symbol has a nonzero mean mode; take its zero-mean part first")]
    NonzeroMeanMode,

    #[error("mode {0:?} is not a nonzero multiple of the direction {1:?}")]
    NotOnLine(Vec<i64>, Vec<i64>),

    #[error("coefficient function is not flagged nonnegative")]
    NotNonnegative,

    #[error("invalid config: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
