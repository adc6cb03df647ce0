use std::process::ExitCode;

use mpaudit_core::{AuditError, ErrorKind};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Audit(#[from] AuditError),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        let code = match self {
            CliError::Config(_) => 2,
            CliError::Audit(e) => match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Infeasible => 3,
                ErrorKind::Data => 4,
            },
            CliError::Io(_) | CliError::Csv(_) => 4,
        };
        ExitCode::from(code)
    }
}
