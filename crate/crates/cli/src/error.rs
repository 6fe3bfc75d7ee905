use std::fmt;

/// Failure of a command, carrying the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or bad input data: exit 2.
    Usage(String),
    /// Everything else: exit 1.
    Internal(String),
    /// Engine and reference disagreed; the report was already printed.
    Mismatch(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        CliError::Internal(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) | CliError::Mismatch(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Internal(m) | CliError::Mismatch(m) => f.write_str(m),
        }
    }
}

impl From<adaptprune::Error> for CliError {
    fn from(e: adaptprune::Error) -> Self {
        if e.is_input_error() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Internal(e.to_string())
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(format!("serializing output: {e}"))
    }
}

/// Errors on paths the user named are input problems.
pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}
