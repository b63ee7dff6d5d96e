use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("invalid token id {id} at position {position}")]
    InvalidId { position: usize, id: u32 },

    #[error("{}: line {line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("incompatible tokenizers: {0}")]
    IncompatibleTokenizer(String),

    #[error("replacement budget exceeded: {required} tokens required, {available} available")]
    BudgetExceeded { required: usize, available: usize },

    #[error("corrupt data in {}: {message}", path.display())]
    Corruption { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("json error in {}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    /// Wraps an error with the sweep parameter that produced it.
    #[error("k = {k}: {source}")]
    AtK {
        k: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Short machine-readable name of the error category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InvalidConfiguration(_) => "invalid_configuration",
            Error::InvalidId { .. } => "invalid_id",
            Error::Parse { .. } => "parse",
            Error::Format(_) => "format",
            Error::IncompatibleTokenizer(_) => "incompatible_tokenizer",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::Corruption { .. } => "corruption",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
            Error::AtK { source, .. } => source.kind(),
        }
    }
}
