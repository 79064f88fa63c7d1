use thiserror::Error;

/// Errors produced by the design pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("cannot interconnect systems: {0}")]
    Interconnection(String),

    #[error("numerical failure: {what} (residual {residual:e})")]
    Numeric { what: String, residual: f64 },

    #[error("response evaluated at a pole: {0}")]
    PoleEvaluation(String),

    #[error("`{system}` rejected: {reason}")]
    Validation { system: String, reason: String },

    #[error("system is outside the operation's domain: {0}")]
    Domain(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("bound violated: lhs {lhs:e} exceeds rhs {rhs:e}")]
    BoundViolation { lhs: f64, rhs: f64 },

    #[error("multi-delay term {index} failed: {source}")]
    Term {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn numeric(what: impl Into<String>, residual: f64) -> Self {
        Error::Numeric {
            what: what.into(),
            residual,
        }
    }

    pub(crate) fn validation(system: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            system: system.into(),
            reason: reason.into(),
        }
    }
}
