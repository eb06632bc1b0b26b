use std::path::PathBuf;

use crate::mgda::TrainTrace;
use crate::posterior::FrontierArchive;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller broke a documented precondition (shape mismatch, empty input, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Training produced NaN/Inf. The trace collected up to the failing step is kept.
    #[error("optimization diverged at step {step}")]
    Diverged { step: usize, trace: Box<TrainTrace> },

    /// A frontier exploration failed part-way; `archive` holds every completed round.
    #[error("exploration stopped after {} completed rounds: {source}", archive.len())]
    Exploration {
        archive: FrontierArchive,
        #[source]
        source: Box<Error>,
    },

    #[error("metric {0} is undefined: total actual demand is zero")]
    UndefinedMetric(&'static str),

    #[error("invalid constraint token `{token}` (token {position}): {reason}")]
    ConstraintParse {
        token: String,
        position: usize,
        reason: String,
    },

    #[error("invalid constraint set: {0}")]
    InvalidConstraint(String),

    #[error("{}:{line}: {reason}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
