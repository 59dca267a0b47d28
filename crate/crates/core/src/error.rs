use std::io;

/// Errors produced by the library and the command-line front end.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    /// A stream or file failed structural validation while being read.
    #[error("corrupt stream: {0}")]
    Corrupt(String),

    /// A configuration value is out of its allowed domain.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An argument to an operation violates its precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn corrupt(msg: impl Into<String>) -> Self {
        Error::Corrupt(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Process exit code used by the `cdma` binary for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 3,
            Error::Corrupt(_) => 4,
            Error::InvalidConfig(_) | Error::InvalidInput(_) => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
