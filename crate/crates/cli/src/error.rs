use thiserror::Error;

use opo_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("validation failed: {0}")]
    ValidationFailed(String),
}

impl CliError {
    /// Process exit status.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                CoreError::InvalidParameter(_) => 2,
                CoreError::PointAbsent(_) | CoreError::NoHopfInBracket(_) => 3,
                CoreError::ExcessiveDivergence { .. } => 4,
                _ => 1,
            },
            _ => 1,
        }
    }
}
