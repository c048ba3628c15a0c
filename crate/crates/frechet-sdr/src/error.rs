use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by the estimators, metrics, and I/O routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Inputs whose shapes do not line up (vector lengths, matrix sizes).
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Inputs outside the mathematical domain of an operation
    /// (non-unit sphere points, negative scale parameters).
    #[error("domain error: {0}")]
    Domain(String),

    /// Out-of-range tuning parameters (`d > p`, `k >= n`, `epsilon <= 0`).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A metric specification that cannot be applied to the given responses.
    #[error("incompatible configuration: {0}")]
    Config(String),

    /// Data that fails a structural invariant (asymmetric distance matrix,
    /// decreasing quantile grid, rank-deficient basis).
    #[error("validation failed: {0}")]
    Validation(String),

    /// A linear-algebra routine that could not complete (failed factorization,
    /// degenerate local system).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Malformed text input; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status for the CLI: 3 for numerical failures, 2 for
    /// everything else (usage errors exit 1 before reaching this).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
