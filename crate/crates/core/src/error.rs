//! Error type shared by every module of the crate.

use std::path::PathBuf;

/// Errors produced by vdlab.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("malformed RIFF/WAV header in {path}: {reason}")]
    MalformedWav { path: PathBuf, reason: String },

    #[error("unsupported WAV encoding in {path}: {detail}")]
    UnsupportedEncoding { path: PathBuf, detail: String },

    #[error("{source_name}:{line}: {message}")]
    Annotation {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("input too short: {0}")]
    TooShort(String),

    #[error("training diverged: non-finite loss at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },

    #[error("SNR undefined: {0}")]
    SnrUndefined(String),

    #[error("missing predictions for clips: {}", .0.join(", "))]
    MissingClips(Vec<String>),

    #[error("duplicate song id: {0}")]
    DuplicateSong(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input (as opposed to failures while running).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::FileNotFound(_)
                | Error::InvalidParameter(_)
                | Error::Config(_)
                | Error::Annotation { .. }
                | Error::MalformedWav { .. }
                | Error::UnsupportedEncoding { .. }
                | Error::DuplicateSong(_)
                | Error::MissingClips(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
