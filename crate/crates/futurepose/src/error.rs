//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("backward requires scalar root, got shape {0:?}")]
    NonScalarRoot(Vec<usize>),

    #[error("disconnected gradient: root does not depend on the requested tensor")]
    DisconnectedGradient,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid skeleton: {0}")]
    InvalidSkeleton(String),

    #[error("degenerate coordinate: {0}")]
    DegenerateCoordinate(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("empty prior")]
    EmptyPrior,

    #[error("segment too short: need {need} frames, have {have}")]
    SegmentTooShort { need: usize, have: usize },

    #[error("unknown motion class {0}")]
    UnknownClass(usize),

    #[error("classification head not initialized")]
    HeadUninitialized,

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("malformed record {index}: {msg}")]
    MalformedRecord { index: usize, msg: String },

    #[error("format version mismatch: found {found}, supported {supported}")]
    VersionMismatch { found: u32, supported: u32 },

    #[error("truncated or corrupt file: {0}")]
    Corrupt(String),

    #[error("training diverged at step {step}: {msg}")]
    NonFiniteLoss { step: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
