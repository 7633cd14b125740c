use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient corpus: {0}")]
    InsufficientCorpus(String),

    #[error("all-zero co-occurrence matrix")]
    ZeroMass,

    #[error("no labeled edges available for modularity")]
    NoLabeledEdges,

    #[error("degenerate weight distribution: {distinct} distinct values for k = {k}")]
    DegenerateWeights { distinct: usize, k: usize },

    #[error("embedding dimension {dim} exceeds node count {nodes}")]
    DimensionTooLarge { dim: usize, nodes: usize },

    #[error("degenerate embedding row for node {0}")]
    DegenerateRow(String),

    #[error("degenerate distance distribution (max(D) == min(D))")]
    DegenerateDistances,

    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),

    #[error("indistinguishable classes: {0}")]
    IndistinguishableClasses(String),

    #[error("empty score class {0}")]
    EmptyClass(usize),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(path: &std::path::Path, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
