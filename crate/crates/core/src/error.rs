use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure categories surfaced by the library and mapped to CLI exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid {kind} id {id} (lattice has {count})")]
    InvalidId {
        kind: &'static str,
        id: usize,
        count: usize,
    },

    #[error("lattice mismatch: expected {expected} edges, found {found}")]
    LatticeMismatch { expected: usize, found: usize },

    #[error("boundary undefined for an empty or full region")]
    DegenerateRegion,

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("assertion failed: {0}")]
    Assertion(String),

    #[error("oracle failed on region {region}: {source}")]
    Oracle {
        region: String,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed input at `{key}`: {message}")]
    Parse { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse category used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Budget,
    Assertion,
    Other,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::Parse { .. } | Error::InvalidId { .. } => ErrorCategory::Config,
            Error::LatticeMismatch { .. } | Error::DegenerateRegion | Error::Precondition(_) => ErrorCategory::Config,
            Error::Budget(_) => ErrorCategory::Budget,
            Error::Assertion(_) => ErrorCategory::Assertion,
            Error::Oracle { source, .. } => source.category(),
            Error::Io(_) => ErrorCategory::Other,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            ErrorCategory::Config => 2,
            ErrorCategory::Budget => 3,
            ErrorCategory::Assertion => 4,
            ErrorCategory::Other => 1,
        }
    }

    pub(crate) fn parse(key: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Error::Parse {
            key: key.into(),
            message: message.to_string(),
        }
    }
}
