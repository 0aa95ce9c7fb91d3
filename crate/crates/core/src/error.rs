use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("mask is empty")]
    EmptyMask,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("feature vector has length {0}, expected {expected}", expected = crate::FEATURE_DIM)]
    FeatureLength(usize),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("malformed run-length encoding: {0}")]
    Rle(String),
    #[error("candidate id {0} not found")]
    UnknownCandidate(u64),

    #[error("bad .flo magic {0}")]
    BadMagic(f32),
    #[error("truncated .flo payload: expected {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("nonpositive .flo dimensions {width}x{height}")]
    NonPositiveDims { width: i32, height: i32 },
    #[error(".flo has {0} trailing bytes")]
    TrailingBytes(usize),

    #[error("pyramid level {0} is not supported (expected 4, 5 or 6)")]
    UnsupportedLevel(u32),
    #[error("pyramid level {0} missing from base pyramid")]
    MissingLevel(u32),
    #[error("field {width}x{height} is not divisible by {factor}")]
    NotDivisible {
        width: usize,
        height: usize,
        factor: usize,
    },

    #[error("no valid pixels to evaluate")]
    NoValidPixels,
    #[error("all reports are excluded")]
    AllExcluded,

    #[error("could not place object {object} after {attempts} attempts")]
    PlacementFailed { object: usize, attempts: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
