use std::fmt;

use oneshot_topk::Error;

/// Exit code 1: an audit, bound check or graph constraint did not hold.
pub const EXIT_FAILED: u8 = 1;
/// Exit code 2: bad flags, config or input files.
pub const EXIT_INVALID: u8 = 2;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self { code: EXIT_INVALID, message: message.into() }
    }

    pub fn failed(message: impl Into<String>) -> Self {
        Self { code: EXIT_FAILED, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::Budget(_) | Error::Parse { .. } | Error::Io(_) => {
                Self::invalid(e.to_string())
            }
            Error::Quadrature { .. }
            | Error::Convergence { .. }
            | Error::NotConstrained { .. }
            | Error::Disconnected => Self::failed(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::invalid(e.to_string())
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub fn require<T>(value: Option<T>, name: &str) -> CliResult<T> {
    value.ok_or_else(|| {
        Failure::invalid(format!("missing required parameter `{name}` (flag --{})", name.replace('_', "-")))
    })
}
