use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported image format for {path}: {detail}")]
    UnsupportedFormat { path: PathBuf, detail: String },
    #[error("corrupt image data in {path}: {detail}")]
    CorruptData { path: PathBuf, detail: String },
    #[error("image too small: {0}")]
    TooSmall(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("expected a 3-channel image, got {0} channel(s)")]
    NotRgb(u8),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
