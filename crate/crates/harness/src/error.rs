use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Failures surfaced by the CLI, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, missing inputs or incompatible dimensions.
    #[error("{0}")]
    Config(String),

    /// Anything that went wrong while running.
    #[error("{0}")]
    Fault(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Fault(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Fault(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Fault(e.to_string())
    }
}

/// Input validation errors from the core library become config errors;
/// everything else is a fault.
pub fn classify(e: dapg_core::Error) -> CliError {
    match e {
        dapg_core::Error::InvalidInput(_) | dapg_core::Error::Format { .. } | dapg_core::Error::MissingFeature(_) => {
            CliError::Config(e.to_string())
        }
        other => CliError::Fault(other.to_string()),
    }
}
