use thiserror::Error;

use crate::{agent::AgentError, nn::NnError, preprocess::PreprocessError, sim::SimError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Top-level error. Each variant maps onto one CLI exit code class.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("invalid usage: {0}")]
    Usage(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code: 1 usage, 2 data/format, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Sim(SimError::Config { .. }) => 1,
            Error::Nn(NnError::Hyper(_)) => 1,
            Error::Numeric(_) => 3,
            Error::Nn(NnError::NonFinite { .. }) => 3,
            Error::Nn(NnError::GradCheckFailed { .. }) => 3,
            Error::Agent(AgentError::Nn(NnError::NonFinite { .. })) => 3,
            _ => 2,
        }
    }
}
