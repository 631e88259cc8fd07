use std::fmt;

/// Failure classes with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2.
    Usage(String),
    /// Exit 3.
    Numerical(String),
    /// Exit 4.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, msg) = match self {
            CliError::Usage(m) => ("usage error", m),
            CliError::Numerical(m) => ("numerical failure", m),
            CliError::Io(m) => ("io error", m),
        };
        // diagnostics are a single line
        write!(f, "{kind}: {}", msg.replace('\n', " "))
    }
}

impl From<tpbn::Error> for CliError {
    fn from(e: tpbn::Error) -> Self {
        match e {
            tpbn::Error::Numerical(m) => CliError::Numerical(m),
            tpbn::Error::Usage(m) => CliError::Usage(m),
            other => CliError::Usage(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn io_err(path: &std::path::Path, e: impl fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}
