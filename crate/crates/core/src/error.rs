//! Error type shared by every module of the toolkit.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("criterion current {target:.3e} A is not crossed within the sweep")]
    NoCrossing { target: f64 },

    #[error("sweep spans {decades:.2} decades below the criterion current, need at least {required}")]
    InsufficientDecades { decades: f64, required: f64 },

    #[error("no linear Y-function window found (best R² = {best_r2:.4})")]
    LinearWindow { best_r2: f64 },

    #[error("on/off ratio {ratio:.3e} is not reached within the sweep")]
    UnreachableRatio { ratio: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A logic cell whose pull-up or pull-down network cannot switch the output.
    #[error("cell is stuck: {0}")]
    Stuck(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing parameter set `{0}`")]
    MissingSet(String),

    #[error("infeasible anchors: {}", .0.join(", "))]
    Infeasible(Vec<String>),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}
