use thiserror::Error;

use crate::features::FeatureKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed image file: {0}")]
    MalformedFile(String),

    #[error("unsupported bit depth: {0}")]
    UnsupportedBitDepth(String),

    #[error("invalid pixel grid: {0}")]
    InvalidGrid(String),

    #[error("{kind} feature needs at least 2 pixels, sequence has {len}")]
    SequenceTooShort { kind: FeatureKind, len: usize },

    #[error("empty feature stream")]
    EmptyStream,

    #[error("feature kind mismatch: {0} vs {1}")]
    KindMismatch(FeatureKind, FeatureKind),

    #[error("total masses differ: {reference} vs {adjusted}")]
    MassMismatch { reference: f64, adjusted: f64 },

    #[error("distribution has no positive mass")]
    ZeroMass,

    #[error("renormalization method `{method}` does not apply to `{kind}` feature")]
    UnsupportedKind { method: &'static str, kind: FeatureKind },

    #[error("cannot stretch a zero-mean distribution onto mean {target}")]
    ZeroMean { target: f64 },

    #[error("image sizes differ: {a_width}x{a_height} vs {b_width}x{b_height}")]
    SizeMismatch {
        a_width: usize,
        a_height: usize,
        b_width: usize,
        b_height: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
