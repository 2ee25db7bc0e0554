use std::fmt;

use crate::table::Table;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error{}: {message}", Location(*line, key.as_deref()))]
    Config {
        line: Option<usize>,
        key: Option<String>,
        message: String,
    },
    #[error(transparent)]
    Model(#[from] treerisk_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{failed} verification check(s) failed")]
    VerificationFailed { failed: usize, report: Table },
}

struct Location<'a>(Option<usize>, Option<&'a str>);

impl fmt::Display for Location<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.0, self.1) {
            (Some(line), Some(key)) => write!(f, " at line {line}, key `{key}`"),
            (Some(line), None) => write!(f, " at line {line}"),
            (None, Some(key)) => write!(f, " in key `{key}`"),
            (None, None) => Ok(()),
        }
    }
}

impl CliError {
    pub fn config(line: Option<usize>, key: Option<&str>, message: impl Into<String>) -> Self {
        CliError::Config {
            line,
            key: key.map(str::to_owned),
            message: message.into(),
        }
    }

    /// 2 for configuration problems, 3 for resource limits, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use treerisk_core::Error as E;
        match self {
            CliError::Config { .. } => 2,
            CliError::Model(E::InvalidParameter(_) | E::OutOfRange { .. } | E::InvalidArgument(_)) => 2,
            CliError::Model(E::ResourceLimit(_)) => 3,
            _ => 1,
        }
    }
}
