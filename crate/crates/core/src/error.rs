use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error in {op}: {msg}")]
    Shape { op: &'static str, msg: String },

    #[error("unsupported {0}")]
    Unsupported(String),

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("invalid model config: {0}")]
    Config(String),

    #[error("forward cache unusable: {0}")]
    Cache(String),

    #[error(transparent)]
    ModelFile(#[from] ModelFileError),

    #[error("manifest line {line}: {msg}")]
    Manifest { line: u64, msg: String },

    #[error("image {}: {msg}", path.display())]
    Image { path: PathBuf, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty dataset: {0}")]
    EmptyDataset(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, msg: String) -> Self {
        Error::Shape { op, msg }
    }
}

/// Failures when decoding a serialized model.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelFileError {
    #[error("bad magic bytes (not a model file)")]
    BadMagic,

    #[error("unsupported model format version {0}")]
    Version(u16),

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("model file truncated")]
    Truncated,

    #[error("malformed model file: {0}")]
    Malformed(String),
}
