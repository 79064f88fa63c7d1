use thiserror::Error;

/// Failures reported by the command line, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Stability(String),

    #[error("{0}")]
    Solver(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Stability(_) => "StabilityError",
            CliError::Solver(_) => "SolverError",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Stability(_) => 3,
            CliError::Solver(_) => 4,
        }
    }
}

impl From<sdfir::Error> for CliError {
    fn from(e: sdfir::Error) -> Self {
        use sdfir::Error as E;
        let msg = e.to_string();
        match e {
            E::Term { source, .. } => match CliError::from(*source) {
                CliError::Config(_) => CliError::Config(msg),
                CliError::Stability(_) => CliError::Stability(msg),
                CliError::Solver(_) => CliError::Solver(msg),
            },
            E::Validation { .. } | E::Domain(_) | E::PoleEvaluation(_) => CliError::Stability(msg),
            E::Solver(_) | E::Numeric { .. } | E::BoundViolation { .. } => CliError::Solver(msg),
            E::Dimension(_) | E::Parameter(_) | E::Input(_) | E::Interconnection(_) => CliError::Config(msg),
        }
    }
}
