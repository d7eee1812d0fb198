use thiserror::Error;

/// Errors raised by every fallible operation in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument must be a positive integer, got {0}")]
    ZeroArgument(u64),

    #[error("invalid range [{lo}, {hi}]")]
    InvalidRange { lo: u64, hi: u64 },

    #[error("segment of length {len} exceeds the configured maximum {max}")]
    SegmentTooLong { len: u64, max: u64 },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("series needs {needed} terms but the context allows {max_terms}")]
    TermBudget { needed: u64, max_terms: u64 },

    #[error("precision must be at least 53 bits, got {0}")]
    Precision(usize),

    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },

    #[error("checkpoint integrity check failed: {0}")]
    CheckpointCorrupt(String),

    #[error("no certified sign change on [{lo}, {hi}]: {reason}")]
    NoSignChange { lo: f64, hi: f64, reason: String },

    #[error("sign of the series could not be certified at x = {x} after raising precision to {bits} bits")]
    UncertainSign { x: f64, bits: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
