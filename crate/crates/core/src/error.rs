use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("degenerate prior: mean undefined with zero trials and zero prior strength")]
    DegeneratePrior,

    #[error("requested {requested} points but only {available} are available")]
    InsufficientData { requested: usize, available: usize },

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("cholesky factorization failed even with jitter {jitter:e}")]
    Cholesky { jitter: f64 },

    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("fingerprint mismatch: expected {expected}, found {found}")]
    FingerprintMismatch { expected: String, found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status for the command-line tool: 3 missing input,
    /// 4 malformed input, 5 fingerprint mismatch, 6 divergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingFile(_) => 3,
            Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => 3,
            Error::Malformed(_) | Error::Csv(_) | Error::Json(_) => 4,
            Error::FingerprintMismatch { .. } => 5,
            Error::Diverged(_) => 6,
            _ => 1,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
