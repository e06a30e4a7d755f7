use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_SELFTEST: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_VALIDITY: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("{0}")]
    Usage(String),

    #[error("selftest failed: {}", .0.join(", "))]
    Selftest(Vec<String>),

    #[error(transparent)]
    Core(#[from] rws_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_INPUT,
            CliError::Selftest(_) => EXIT_SELFTEST,
            CliError::Core(e) if e.is_validity() => EXIT_VALIDITY,
            CliError::Core(_) => EXIT_INPUT,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
