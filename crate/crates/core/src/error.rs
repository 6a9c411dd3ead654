use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite component x[{index}] = {value}")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid bounds [{lower}, {upper}]: lower must be strictly below upper")]
    InvalidBounds { lower: f64, upper: f64 },

    #[error("{function} requires dimension >= {min}, got {actual}")]
    InvalidDimension {
        function: &'static str,
        min: usize,
        actual: usize,
    },

    #[error("dimension index {index} out of range for dimension {dimension}")]
    IndexOutOfRange { index: usize, dimension: usize },

    #[error("constriction requires phi1 + phi2 > 4, got {phi}")]
    InvalidConstriction { phi: f64 },

    #[error("perturbation size must be positive and finite, got {0}")]
    InvalidPerturbationSize(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("unknown function `{0}`")]
    UnknownFunction(String),

    #[error("cannot summarize an empty sample")]
    EmptySample,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
