use std::path::PathBuf;

use thiserror::Error;

use crate::graph::VertexId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid travel-time function: {0}")]
    InvalidFunction(String),

    #[error("FIFO violation on segment {segment}: slope {slope}")]
    FifoViolation { segment: usize, slope: f64 },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("no edge from vertex {0} to vertex {1}")]
    MissingEdge(VertexId, VertexId),

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("unknown category `{0}`")]
    UnknownCategory(String),

    #[error("destination unreachable")]
    Unreachable,

    #[error("lower-bound table fingerprint does not match the graph")]
    FingerprintMismatch,

    #[error("search budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed table file {}: {msg}", path.display())]
    BadTable { path: PathBuf, msg: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
