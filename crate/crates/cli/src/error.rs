use std::fmt;

/// Everything a subcommand can fail with, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad command-line usage.
    Usage(String),
    Core(neurosim::Error),
    Io(String, std::io::Error),
    Output(String),
}

impl CliError {
    /// 1 for configuration and usage errors, 2 for everything raised while
    /// running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_config() => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(path, e) => write!(f, "{path}: {e}"),
            CliError::Output(m) => write!(f, "output error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<neurosim::Error> for CliError {
    fn from(e: neurosim::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
