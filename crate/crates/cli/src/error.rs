//! Process-level error split: validation problems (bad config, bad flags,
//! unusable input files) exit with 2, numerical failures during a run exit
//! with 1.

use std::fmt;

use crate::config::ConfigError;

#[derive(Debug)]
pub enum CliError {
    /// The request itself is wrong; nothing was computed.
    Validation(String),
    /// The computation started and failed (breakdown, out-of-range iterate,
    /// rank deficiency, I/O while writing results).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }

    /// Wraps a library error that surfaced while checking inputs.
    pub fn invalid(err: gkreg::Error) -> Self {
        CliError::Validation(err.to_string())
    }

    /// Wraps a library error that surfaced mid-computation.
    pub fn numerical(err: gkreg::Error) -> Self {
        CliError::Numerical(err.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) | CliError::Numerical(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(err: ConfigError) -> Self {
        CliError::Validation(err.0)
    }
}
