use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("invalid shape {shape:?}: {reason}")]
    InvalidShape { shape: Vec<usize>, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("variable belongs to a different tape")]
    TapeMismatch,

    #[error("loss must be a real scalar: {0}")]
    NonScalarLoss(String),

    #[error("non-finite value at {0}")]
    NonFinite(String),

    #[error("missing gradient for parameter `{0}`")]
    MissingGradient(String),

    #[error("bad {which} magic: expected {expected:#010x}, found {found:#010x}")]
    BadMagic {
        which: &'static str,
        expected: u32,
        found: u32,
    },

    #[error("truncated {0}")]
    Truncated(String),

    #[error("count mismatch: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("unsupported audio format in {path}: {reason}")]
    UnsupportedAudio { path: PathBuf, reason: String },

    #[error("empty class directory `{0}`")]
    EmptyClass(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, left: &[usize], right: &[usize]) -> Self {
        Error::ShapeMismatch {
            op,
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }
}
