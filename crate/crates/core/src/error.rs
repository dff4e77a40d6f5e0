use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{path}: row {row}, column `{column}`: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{0}: empty input")]
    Empty(PathBuf),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("attribute `{0}` is not categorical")]
    NotCategorical(String),

    #[error("value `{value}` does not occur in attribute `{attribute}`")]
    UnknownValue { attribute: String, value: String },

    #[error("histogram budget must be at least 1, got {0}")]
    InvalidBudget(usize),

    #[error("histogram has no buckets")]
    EmptyHistogram,

    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),

    #[error("requested {requested} answers but the dataset holds {available} tuples")]
    NotEnoughTuples { requested: usize, available: usize },

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
