use std::process::ExitCode;

use bergdecomp::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    /// 2 for bad input, 3 for resource caps, 4 for points outside where a
    /// kernel or map can be evaluated. Residual failures (1) are not errors.
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Parse(_) | CliError::Io(_) => 2,
            CliError::Core(e) => match e {
                CoreError::GroupTooLarge { .. } | CoreError::Truncation { .. } | CoreError::Quadrature { .. } => 3,
                CoreError::OutsideValidity(_) | CoreError::Domain(_) => 4,
                CoreError::Singular
                | CoreError::Dimension { .. }
                | CoreError::Argument(_)
                | CoreError::Unsupported(_) => 2,
            },
        })
    }
}

pub type CliResult<T> = Result<T, CliError>;
