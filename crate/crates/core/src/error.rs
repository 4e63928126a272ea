use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid arm pool: {0}")]
    InvalidPool(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    /// The threshold cannot be met even by the best fractional selection.
    #[error("infeasible threshold {threshold}: the largest achievable first-level sum is {achievable}")]
    Infeasible { threshold: f64, achievable: f64 },

    #[error("malformed selection vector: {0}")]
    MalformedVector(String),

    #[error("hyperparameter violation: {0}")]
    HyperparamViolation(String),

    #[error("capping equation has no solution for beta = {beta}")]
    CappingUnsolvable { beta: f64 },

    #[error("non-finite weight at round {round}")]
    NumericOverflow { round: u64 },

    #[error("child pool has {pool} arms but {select} must be selected")]
    ChildPoolTooSmall { pool: usize, select: usize },

    #[error("instance too large: K = {k} exceeds the limit of {max}")]
    TooLarge { k: usize, max: usize },

    #[error("degenerate variance in correlation input")]
    DegenerateVariance,

    #[error("degenerate range: all view counts are equal")]
    DegenerateRange,

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
