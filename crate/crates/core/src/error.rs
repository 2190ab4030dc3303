use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: u32,
        column: u32,
        message: String,
    },

    #[error("matrix parse error at row {row}, column {column}: {message}")]
    MatrixCell {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("no roads: the document contains no usable highway ways")]
    NoRoads,

    #[error("unknown node id {0}")]
    UnknownNode(i64),

    #[error("unknown edge id {0}")]
    UnknownEdge(usize),

    #[error("site {site_id} is not attached to the road graph: {reason}")]
    UnattachedSite { site_id: usize, reason: String },

    #[error("matrix size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("infeasible plan: {0}")]
    InfeasiblePlan(String),

    #[error("infeasible instance: unreachable fault sites {unreachable:?}")]
    Unreachable { unreachable: Vec<usize> },

    #[error("instance exceeds the {solver} envelope ({limit}); use the greedy solver instead")]
    EnvelopeExceeded { solver: &'static str, limit: String },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(#[from] toml::de::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that mean "no feasible plan exists" rather than bad input.
    pub fn is_infeasibility(&self) -> bool {
        matches!(self, Error::InfeasiblePlan(_) | Error::Unreachable { .. })
    }
}
