use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("I/O error on {path}: {source}")]
    File { path: PathBuf, source: io::Error },

    #[error("line {line} (byte offset {offset}): {message}")]
    Parse {
        line: usize,
        offset: u64,
        message: String,
    },

    #[error("line {line} (byte offset {offset}): invalid UTF-8")]
    Decode { line: usize, offset: u64 },

    #[error("{0}: input is empty")]
    EmptyInput(&'static str),

    #[error("at least 3 lemmas are required for a train/dev/test split, found {found}")]
    InsufficientLemmas { found: usize },

    #[error("prediction coverage error: {missing} missing, {duplicate} duplicated (first offending keys: {keys})")]
    Coverage {
        missing: usize,
        duplicate: usize,
        keys: String,
    },

    #[error("numeric range error at entry {entry}: {detail}")]
    NumericRange { entry: String, detail: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, offset: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }

    /// Wrap this error with a human-readable context, e.g. a language id.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code: 1 usage error, 2 data error, 3 numeric error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Context { source, .. } => source.exit_code(),
            Error::Config(_) => 1,
            Error::NumericRange { .. } | Error::Domain(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
