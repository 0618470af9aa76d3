use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: line {line}: {message}")]
    Parse {
        context: &'static str,
        line: usize,
        message: String,
    },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty query")]
    EmptyQuery,

    #[error("nothing to summarize")]
    NothingToSummarize,

    #[error("insufficient negatives: {0}")]
    InsufficientNegatives(String),

    #[error("unknown document id `{0}`")]
    UnknownDocument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("run and qrels share no topics")]
    DisjointTopics,

    #[error("invalid run: {0}")]
    InvalidRun(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("scorer: {0}")]
    Scorer(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: &'static str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            context,
            line,
            message: message.into(),
        }
    }
}
