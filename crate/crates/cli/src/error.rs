use std::fmt;
use std::path::Path;

use irsem::Error;

/// Stable exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INPUT: i32 = 2;
    pub const PREP: i32 = 3;
    pub const MODEL: i32 = 4;
    pub const ESTIMATION: i32 = 5;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        CliError::new(exit::INPUT, message)
    }

    pub fn model(message: impl Into<String>) -> Self {
        CliError::new(exit::MODEL, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub fn code_of(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::Io(_) | Error::Data(_) => exit::INPUT,
        Error::Prep(_) => exit::PREP,
        Error::Model(_) => exit::MODEL,
        Error::Estimation(_) => exit::ESTIMATION,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::new(code_of(&e), e.to_string())
    }
}

/// Attaches the file name to parse errors (`path:line: message`) and other
/// failures while reading `path`.
pub fn in_file(path: &Path) -> impl Fn(Error) -> CliError + '_ {
    move |e| {
        let code = code_of(&e);
        match e {
            Error::Parse { line, message } => {
                CliError::new(code, format!("{}:{line}: {message}", path.display()))
            }
            other => CliError::new(code, format!("{}: {other}", path.display())),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
