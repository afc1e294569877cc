use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    /// Cap, precision or search limits were hit.
    #[error("{0}")]
    Infeasible(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Infeasible(_) | CliError::Io(_) => EXIT_INFEASIBLE,
        }
    }
}

impl From<fqdyn::Error> for CliError {
    fn from(e: fqdyn::Error) -> CliError {
        use fqdyn::Error as E;
        match e {
            E::InvalidField(_) | E::Parse(_) | E::OutOfRange(_) | E::DimensionMismatch(_) => CliError::Usage(e.to_string()),
            _ => CliError::Infeasible(e.to_string()),
        }
    }
}
