use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("invalid shape {shape:?}: {reason}")]
    InvalidShape { shape: Vec<usize>, reason: &'static str },

    #[error("image {width}x{height} is smaller than the required {min_width}x{min_height}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min_width: usize,
        min_height: usize,
    },

    #[error("channel mismatch: layer expects {expected} input channels, got {found}")]
    ChannelMismatch { expected: usize, found: usize },

    #[error("unsupported scale factor {0} (expected one of 2, 3, 4, 8)")]
    InvalidScale(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no μ candidates to select from")]
    EmptyCandidates,

    #[error("non-finite loss: {0}")]
    Divergence(String),

    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

/// Failure categories when decoding a checkpoint.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CheckpointError {
    #[error("bad magic bytes (not a checkpoint)")]
    BadMagic,
    #[error("CRC mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    CrcMismatch { stored: u32, computed: u32 },
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed layer data: {0}")]
    BadShape(String),
}
