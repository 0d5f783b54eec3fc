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

    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("failed to parse {what}: {message}")]
    Parse { what: String, message: String },

    #[error("value {value} is outside the decision scale {scale}")]
    OffScale { value: f64, scale: String },

    #[error("duplicate response for participant {participant} on problem {problem}")]
    DuplicateResponse {
        participant: String,
        problem: String,
    },

    #[error("duplicate problem id {0}")]
    DuplicateProblem(String),

    #[error("unknown problem id {0}")]
    UnknownProblem(String),

    #[error("invalid scale: {0}")]
    InvalidScale(String),

    #[error("invalid profile spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("pool constraint rejected {attempts} consecutive draws")]
    PoolExhausted { attempts: usize },

    #[error("unparseable response for scale {scale}: {raw:?}")]
    Unparseable { raw: String, scale: String },

    #[error("backend failure: {0}")]
    Backend(String),

    #[error("missing reference decision for problem {0}")]
    MissingReference(String),

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Divergence { epoch: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("insufficient samples: {0}")]
    Insufficient(String),

    #[error("unpaired participant {0}")]
    Unpaired(String),

    #[error("problem id mismatch: {0}")]
    IdMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether this error stems from bad input data rather than a runtime failure.
    pub fn is_data_error(&self) -> bool {
        !matches!(
            self,
            Error::Io { .. } | Error::Backend(_) | Error::Divergence { .. } | Error::NonFinite(_)
        )
    }
}
