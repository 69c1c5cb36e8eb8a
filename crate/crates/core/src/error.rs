use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// A configuration value that fails validation before any computation starts.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("fixed gain sequence exhausted at round {round} (sequence has {len} rounds)")]
    EndOfSequence { round: u64, len: usize },

    #[error("{path}:{line}: {msg}")]
    SequenceFile {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("internal numerical failure: {0}")]
    Internal(String),

    #[error("round {round}: {source}")]
    AtRound {
        round: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("trial {trial}: {source}")]
    AtTrial {
        trial: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            op,
            msg: msg.into(),
        }
    }

    pub(crate) fn at_round(self, round: u64) -> Self {
        Error::AtRound {
            round,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_trial(self, trial: u64) -> Self {
        Error::AtTrial {
            trial,
            source: Box::new(self),
        }
    }
}
