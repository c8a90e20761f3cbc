use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("need at least 2 segments to build a query pool, got {0}")]
    TooFewSegments(usize),

    #[error("requested {requested} queries from a pool of {available}")]
    PoolTooSmall { requested: usize, available: usize },

    #[error("beta floor {floor} is not attainable with kernel scale {scale}")]
    InfeasibleFloor { floor: f64, scale: f64 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("unknown environment `{0}`")]
    UnknownEnv(String),

    #[error("mismatched evaluation grids across seeds")]
    GridMismatch,

    #[error("no metrics to write")]
    EmptyMetrics,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

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

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
