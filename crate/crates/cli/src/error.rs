use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_INFEASIBLE: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Data(levelup_core::Error),

    #[error(transparent)]
    Infeasible(levelup_core::Error),

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) | CliError::Write { .. } => EXIT_DATA,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
        }
    }
}

impl From<levelup_core::Error> for CliError {
    fn from(e: levelup_core::Error) -> Self {
        use levelup_core::Error::*;
        match e {
            Infeasible { .. } | AllUndefined { .. } => CliError::Infeasible(e),
            InvalidConstraint(_) | InvalidSpec(_) | Unsupported(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other),
        }
    }
}
