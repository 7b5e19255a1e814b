use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("vocabulary size must be at least {min}, got {got}")]
    VocabSize { min: usize, got: usize },

    #[error("unknown placeholder {0}")]
    UnknownPlaceholder(String),

    #[error("invalid mining pattern for {sub_category}: {reason}")]
    InvalidPattern { sub_category: String, reason: String },

    #[error("invalid template record {line}: {reason}")]
    InvalidTemplate { line: usize, reason: String },

    #[error("no template pool for sub-category {0}")]
    MissingPool(String),

    #[error("invalid mix ratio {0:?}: both components must be positive integers written as rc:gi")]
    InvalidRatio(String),

    #[error("not enough general-instruction records: need {needed}, have {available} (shortfall {})", needed - available)]
    InsufficientInstructions { needed: usize, available: usize },

    #[error("label pool too small: need at least 4 distinct labels including the gold label, have {0}")]
    LabelPoolTooSmall(usize),

    #[error("gold label {0:?} is not in the label pool")]
    GoldNotInPool(String),

    #[error("invalid configuration:\n{}", .0.iter().map(|p| format!("  - {p}")).collect::<Vec<_>>().join("\n"))]
    InvalidConfig(Vec<String>),

    #[error("malformed record at {location}: {reason}")]
    Malformed { location: String, reason: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for the CLI, grouped by error category.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::InvalidConfig(_) | Error::InvalidRatio(_) | Error::VocabSize { .. } => 2,
            Error::Io { .. } => 3,
            Error::UnknownPlaceholder(_)
            | Error::InvalidPattern { .. }
            | Error::InvalidTemplate { .. }
            | Error::MissingPool(_) => 4,
            _ => 5,
        }
    }
}
