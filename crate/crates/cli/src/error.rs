use std::fmt;

use frankenfilter::Error;

/// Failure of a subcommand, carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(Error),
    Io(std::io::Error),
    Verify(String),
}

impl CliError {
    /// 2 for configuration errors, 3 for a dead estimator, 4 for verification failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Verify(_) => 4,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                Error::EstimatorDead { .. } | Error::AbortGuard { .. } => 3,
                Error::InvalidConfig(_)
                | Error::ThresholdBelowSupremum { .. }
                | Error::NonIntegerSteps { .. }
                | Error::UnknownModel(_)
                | Error::UnknownPreset(_)
                | Error::BridgeOnExactMjp
                | Error::Json(_) => 2,
                _ => 1,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
            CliError::Verify(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
