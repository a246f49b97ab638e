// SPDX-License-Identifier: MIT OR Apache-2.0

use ara_cusum::Error as CoreError;

/// CLI failure classes, one per exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Exit 2: configuration missing, malformed, or out of domain.
    #[error("config error: {0}")]
    Config(String),
    /// Exit 3: threshold calibration could not reach the target.
    #[error("calibration error: {0}")]
    Calibration(String),
    /// Exit 4: input data unreadable or invalid, or output not writable.
    #[error("data error: {0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Calibration(_) => 3,
            CliError::Data(_) => 4,
        }
    }
}

/// Core errors raised while running a validated experiment: calibration
/// failures keep their class, data/i/o problems are data errors, anything
/// else points at the configuration.
impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Calibration(_) => CliError::Calibration(e.to_string()),
            CoreError::Data { .. } | CoreError::DataFile { .. } | CoreError::Io { .. } => {
                CliError::Data(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
