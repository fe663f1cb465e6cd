use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}: row {row}: {message}")]
    Parse {
        file: String,
        row: usize,
        message: String,
    },

    #[error("{file}: file is empty")]
    EmptyFile { file: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("negative exposure at ({row}, {col}): {value}")]
    NegativeExposure { row: usize, col: usize, value: f64 },

    #[error("non-finite value in {what} at ({row}, {col})")]
    NonFinite {
        what: &'static str,
        row: usize,
        col: usize,
    },

    #[error("unit {row} has no strictly positive exposure")]
    ZeroExposureRow { row: usize },

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("degenerate instrument: sum of Z_i X_i is numerically zero")]
    DegenerateInstrument,

    #[error("T2 requires reduced form (X = Z)")]
    NotReducedForm,

    #[error("zero variance: studentizer vanished")]
    ZeroVariance,

    #[error("cluster labels are required but missing")]
    MissingClusters,

    #[error("invalid test specification: {0}")]
    InvalidSpec(String),

    #[error("group of size {size} exceeds the enumeration limit of {limit}")]
    GroupTooLarge { size: u128, limit: u128 },

    #[error("shock sampler failure: {0}")]
    Sampler(String),

    #[error("gave up after {discarded} degenerate draws (limit {limit})")]
    RedrawsExhausted { discarded: usize, limit: usize },

    #[error("empty grid")]
    EmptyGrid,

    #[error("invalid interval: {0}")]
    InvalidInterval(String),

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
}

impl Error {
    /// True for failures caused by numerically degenerate data rather than bad input.
    pub fn is_numeric_degeneracy(&self) -> bool {
        matches!(
            self,
            Error::DegenerateInstrument | Error::ZeroVariance | Error::RedrawsExhausted { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
