use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error(transparent)]
    Physics(#[from] esoc_core::Error),

    #[error("{failed} of {total} oracle checks failed")]
    ChecksFailed { failed: usize, total: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit status: 2 for physics or numerics, 3 for configuration, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        use esoc_core::Error as E;
        match self {
            CliError::Parse(_) | CliError::Validation(_) => 3,
            CliError::Physics(
                E::InvalidParameter(_) | E::Dimension(_) | E::NotOrthogonal { .. } | E::NotPositiveDefinite { .. },
            ) => 3,
            CliError::Physics(_) | CliError::ChecksFailed { .. } => 2,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}
