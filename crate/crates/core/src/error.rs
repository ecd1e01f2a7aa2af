use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("coefficient vector must be finite and nonzero")]
    InvalidCoefficients,
    #[error("quadric does not describe a real bounded ellipsoid")]
    NotAnEllipsoid,
    #[error("quadric is degenerate (eigenvalue ratio {ratio:.3e})")]
    Degenerate { ratio: f64 },
    #[error("gradient vanishes at the query point")]
    GradientVanishes,
    #[error("foot-point iteration did not converge (residual {residual:.3e})")]
    ConvergenceFailure { residual: f64 },
    #[error("least-squares system is rank deficient (eigengap {gap:.3e})")]
    RankDeficient { gap: f64 },
    #[error("only {support} points carry weight, need at least {needed}")]
    InsufficientSupport { support: usize, needed: usize },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("no candidate validated as an ellipsoid within {iterations} iterations")]
    NoModelFound { iterations: u64 },
    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Model {
        path: PathBuf,
        #[source]
        source: FitError,
    },
}

impl IoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.into(),
            source,
        }
    }
}
