use thiserror::Error;

use crate::models::instantiation::NotWellDefined;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{}", located(*.line, .message))]
    Semantic { line: Option<usize>, message: String },
    #[error("missing value for parameter '{0}'")]
    MissingParameter(String),
    #[error("instantiation is not well-defined: {0}")]
    NotWellDefined(NotWellDefined),
    #[error("unknown label '{0}'")]
    UnknownLabel(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("invalid region: {0}")]
    Region(String),
    #[error("enumeration bound exceeded: {0} controllers")]
    EnumerationBound(u128),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn located(line: Option<usize>, message: &str) -> String {
    match line {
        Some(l) => format!("line {l}: {message}"),
        None => message.to_string(),
    }
}

impl Error {
    pub fn semantic(message: impl Into<String>) -> Self {
        Error::Semantic { line: None, message: message.into() }
    }

    pub fn semantic_at(line: usize, message: impl Into<String>) -> Self {
        Error::Semantic { line: Some(line), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
