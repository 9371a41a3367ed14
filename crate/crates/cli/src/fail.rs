//! Exit-status policy: 0 success, 1 user error (bad arguments, unreadable or
//! invalid inputs, violated preconditions), 2 internal assertion failure
//! (a verification suite or consistency check did not hold).

use entorder::Error;

#[derive(Debug)]
pub enum CliError {
    User(String),
    Internal(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn user(msg: impl Into<String>) -> Self {
        CliError::User(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        CliError::Internal(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => 1,
            CliError::Internal(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::User(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        match err {
            Error::Internal(msg) => CliError::Internal(msg),
            other => CliError::User(other.to_string()),
        }
    }
}
