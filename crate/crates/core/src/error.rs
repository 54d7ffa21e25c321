use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{size} MB is not a rung of the ladder {ladder:?}")]
    LadderViolation { size: u32, ladder: Vec<u32> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate training set: {0}")]
    DegenerateTrainingSet(String),

    #[error("model is untrained: {0}")]
    Untrained(String),

    #[error("model file {path}: {message}")]
    ModelParse { path: PathBuf, message: String },

    #[error("training data {path}, line {line}: {message}")]
    DataParse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 for runtime I/O failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            _ => 1,
        }
    }
}
