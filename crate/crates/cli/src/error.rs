use thiserror::Error;

use darboux_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("verification failed: {failed} of {total} checks")]
    Verification { failed: usize, total: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Parameter errors are configuration errors, a node of F is a
    /// certification failure, everything else is numerical.
    pub fn from_core(e: CoreError) -> Self {
        match e {
            CoreError::NonPositiveParameter { .. }
            | CoreError::NonFiniteParameter { .. }
            | CoreError::ErmakovConditionViolated { .. }
            | CoreError::ZeroLambda
            | CoreError::InvalidDarbouxSpec(_)
            | CoreError::InvalidGrid(_)
            | CoreError::CapExceeded { .. }
            | CoreError::CapTooSmall { .. } => CliError::Config(e.to_string()),
            CoreError::NotNodeless { .. } => CliError::Certification(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Certification(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Verification { .. } => 5,
            CliError::Io(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        Self::from_core(e)
    }
}
