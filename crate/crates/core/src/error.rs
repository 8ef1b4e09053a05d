use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid language code {0:?}")]
    InvalidLanguage(String),

    #[error("line {line}: malformed parallel line ({reason})")]
    MalformedLine { line: usize, reason: String },

    #[error("invalid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { offset: usize },

    #[error("line-count mismatch: source has {source_lines} lines, target has {target_lines}")]
    LineCountMismatch {
        source_lines: usize,
        target_lines: usize,
    },

    #[error("unsupported pair {source_lang}-{target_lang}: {reason}")]
    UnsupportedPair {
        source_lang: String,
        target_lang: String,
        reason: String,
    },

    #[error("insufficient items: {what} requires {required}, only {available} available")]
    InsufficientItems {
        what: String,
        required: usize,
        available: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("record {index}: {reason}")]
    Validation { index: usize, reason: String },

    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Structure { path: String, message: String },

    #[error("row {row}: {reason}")]
    Row { row: usize, reason: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },

    #[error("endpoint returned status {status}: {body}")]
    Protocol { status: u16, body: String },

    #[error(
        "aborted: {failed} of {total} items failed transport ({completed} scored, partial results persisted)"
    )]
    PartialResults {
        completed: usize,
        failed: usize,
        total: usize,
        log: Option<PathBuf>,
    },

    #[error("missing result cell for model {model:?} on {benchmark}")]
    MissingCell { model: String, benchmark: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(err: &serde_json::Error) -> Self {
        Error::Json {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }

    /// True for errors raised while talking to a completion endpoint.
    pub fn is_network(&self) -> bool {
        matches!(self, Error::Transport { .. } | Error::Protocol { .. })
    }
}
