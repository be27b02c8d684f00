use thiserror::Error;

/// Errors raised by geometry, bound evaluation, solvers and problem instances.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller broke an operation's precondition (dimension or base-point mismatch,
    /// weight outside `[0, 1]`, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A point failed its geometry's membership check.
    #[error("invalid point: {0}")]
    InvalidPoint(String),

    /// An argument lies outside the mathematical domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// A solver preset needs a constant the oracle does not provide.
    #[error("configuration error: missing constant `{0}`")]
    MissingConstant(&'static str),

    /// Any other invalid configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A non-finite objective or gradient appeared during a run.
    #[error("numerical failure at iteration {iteration}: {what}")]
    Numerical { iteration: usize, what: String },

    /// An iterative procedure hit its iteration cap.
    #[error("no convergence after {iterations} iterations: {diagnostics}")]
    NonConvergence {
        iterations: usize,
        diagnostics: String,
    },

    /// Malformed text input (dataset or trace files).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
