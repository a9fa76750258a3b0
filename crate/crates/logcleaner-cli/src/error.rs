//! Error-to-exit-code mapping: 0 success, 1 usage problems (bad flags,
//! out-of-range parameters, invalid command combinations), 2 data problems
//! (missing or malformed inputs, artifact version mismatches, runtime
//! failures inside the pipeline).

use std::fmt;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// The invocation itself is wrong; exits 1.
    Usage(String),
    /// The invocation is fine but the data or pipeline failed; exits 2.
    Data(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> CliError {
        CliError::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> CliError {
        CliError::Data(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(1),
            CliError::Data(_) => ExitCode::from(2),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<logcleaner_core::Error> for CliError {
    fn from(e: logcleaner_core::Error) -> CliError {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Data(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
