use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("dimension mismatch: expected {expected} compartments, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Demographic diffusion matrix is undefined (a = c = 0).
    #[error("singular demographic diffusion at S={s}, I={i}")]
    SingularDiffusion { s: f64, i: f64 },

    #[error("non-finite state at integration step {step}")]
    Divergence { step: usize },

    #[error("scenario {scenario}: {source}")]
    Scenario {
        scenario: u64,
        #[source]
        source: Box<Error>,
    },

    /// Every non-padded residual is zero, so the window cannot be normalized.
    #[error("degenerate window: residuals are identically zero")]
    DegenerateWindow,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input data (line numbers are 1-based, header is line 1).
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema mismatch: column `{column}`: {message}")]
    Schema { column: String, message: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("invalid value for `{key}`: {message}")]
    InvalidValue { key: String, message: String },
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

    /// The innermost error, looking through scenario wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Scenario { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
