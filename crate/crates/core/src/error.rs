use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised across the crate.
///
/// The variants are grouped by the stage that produces them so callers can
/// map them onto exit statuses without inspecting messages.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input text. `line` is 1-based; 0 means the error is not tied
    /// to a single line.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Well-formed input whose content violates a data invariant.
    #[error("{0}")]
    Data(String),

    /// Data preparation cannot proceed (e.g. zero-variance column).
    #[error("{0}")]
    Prep(String),

    /// The model specification is invalid.
    #[error("{0}")]
    Model(String),

    /// Reading or writing a file failed.
    #[error("{0}")]
    Io(String),

    /// Estimation failed numerically.
    #[error("{0}")]
    Estimation(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
