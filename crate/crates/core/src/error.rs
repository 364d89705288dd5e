use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no hyperedges")]
    NoHyperedges,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid hypergraph: {0}")]
    InvalidHypergraph(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(
        "candidate space has {count} hyperedges, above the exact-sampling limit of {limit}; \
         reduce the node count or the maximum hyperedge size"
    )]
    CandidateSpaceTooLarge { count: f64, limit: f64 },

    #[error("could not draw an unobserved hyperedge of size {size} after {attempts} attempts")]
    NegativeSamplingFailed { size: usize, attempts: usize },

    #[error("ratio too extreme: {0}")]
    RatioTooExtreme(String),

    #[error("all {} restarts failed: {}", .0.len(), .0.join("; "))]
    AllRestartsFailed(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line tool: 2 for data errors,
    /// 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) | Error::AllRestartsFailed(_) => 3,
            _ => 2,
        }
    }
}
