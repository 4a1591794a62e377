use thiserror::Error;

/// Failure classes with their process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl From<fracshape::Error> for CliError {
    fn from(e: fracshape::Error) -> Self {
        use fracshape::Error as E;
        match e {
            E::InvalidConfig(_) | E::InvalidCurve(_) | E::Io(_) | E::Json(_) => Self::Validation(e.to_string()),
            other => Self::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Validation(format!("i/o: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Validation(format!("json: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
