use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid protograph: {0}")]
    InvalidProtograph(String),

    #[error("cannot lift protograph: {0}")]
    Lifting(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate block {block}: zero norm")]
    ZeroNormBlock { block: usize },

    #[error("non-physical parameters: {0}")]
    NonPhysical(String),

    #[error("target unreachable: {0}")]
    Unreachable(String),

    #[error("infeasible operating point: {0}")]
    Infeasible(String),

    #[error("outer batch incomplete: {have} of {need} frames accepted")]
    IncompleteBatch { have: usize, need: usize },

    #[error("density evolution did not bracket a threshold: {0}")]
    NoThreshold(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
