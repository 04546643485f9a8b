use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for {what} (count {count})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        count: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{solver} did not converge in {iterations} iterations (residual {residual:.3e}, target {target:.3e})")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        target: f64,
    },

    #[error("{solver} stagnated after {iterations} iterations (residual {residual:.3e})")]
    Stagnation {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("{solver} diverged (residual {residual:.3e})")]
    Diverged { solver: &'static str, residual: f64 },

    #[error("breakdown in {0}")]
    Breakdown(&'static str),

    #[error("non-positive depth {value:.6e} in cell {cell}")]
    NonPositiveDepth { cell: usize, value: f64 },

    #[error("non-real frequency at k = ({kx}, {ky}): skew part {defect:.3e}")]
    NonRealFrequency { kx: f64, ky: f64, defect: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("expression error at offset {offset}: {message}")]
    Expression { offset: usize, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed dump file: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of an iterative or nonlinear solve.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. }
                | Error::Stagnation { .. }
                | Error::Diverged { .. }
                | Error::Breakdown(_)
        )
    }
}
