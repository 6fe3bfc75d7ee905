use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented invariant. `field` names the offending input.
    #[error("invalid {field}: {reason}")]
    Validation { field: &'static str, reason: String },

    /// A dump could not be decoded (bad magic, unsupported version, truncated payload, bad JSON).
    #[error("malformed dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn validation(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn format(reason: impl Into<String>) -> Self {
        Error::Format(reason.into())
    }

    /// `true` for validation and format errors, i.e. problems with the caller's input.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Validation { .. } | Error::Format(_))
    }
}
