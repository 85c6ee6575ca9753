use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("i/o error: {0}")]
    Write(#[from] std::io::Error),

    #[error("corpus contains no non-empty documents")]
    EmptyCorpus,

    #[error("cannot compute term statistics over an empty document subset")]
    EmptyStats,

    #[error("malformed integrity file at line {line}: {reason}")]
    MalformedIntegrity { line: usize, reason: String },

    #[error("unknown topic name {0:?}: not in the corpus vocabulary")]
    UnknownTopicName(String),

    #[error("malformed hierarchy at line {line}: {reason}")]
    MalformedHierarchy { line: usize, reason: String },

    #[error("term {0:?} appears as a center term under more than one sibling sub-tree")]
    AmbiguousKeyword(String),

    #[error("child center term {0:?} collides with an existing child")]
    CenterTermCollision(String),

    #[error("no such taxonomy node: {0}")]
    UnknownNode(usize),

    #[error("novelty score is undefined for a node with no known sub-topics")]
    UndefinedNovelty,

    #[error("need at least {needed} vectors, got {got}")]
    TooFewVectors { needed: usize, got: usize },

    #[error("concentration must be non-negative, got {0}")]
    NegativeKappa(f64),

    #[error("cannot train an embedding on an empty document set")]
    EmptyDocs,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
