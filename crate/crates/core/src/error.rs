use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for axis of length {len}")]
    Index { index: usize, len: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{kind} transform does not support length {n3}")]
    UnsupportedLength { kind: &'static str, n3: usize },

    #[error("invalid transform: {0}")]
    InvalidTransform(String),

    #[error("numeric integrity check failed: {0}")]
    NumericIntegrity(String),

    #[error("SVD did not converge on transform-domain slice {slice}")]
    SvdFailed { slice: usize },

    #[error("non-finite value in ADMM iterate at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("statistic undefined: {0}")]
    Undefined(String),

    #[error("volume format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn shape_err(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}
