use crate::hashing::SignMode;

/// Errors produced by sketch construction, aggregation, and planning.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("sketch shape mismatch: expected {expected_rows}x{expected_width}, got {rows}x{width}")]
    ShapeMismatch {
        expected_rows: usize,
        expected_width: usize,
        rows: usize,
        width: usize,
    },

    #[error("sketches were built from different hash families (seed mismatch)")]
    FamilyMismatch,

    #[error("cannot decode a sketch with no contributing clients")]
    EmptySketch,

    #[error("strategy requires a {expected:?}-signs hash family, got {got:?}")]
    ModeMismatch { expected: SignMode, got: SignMode },

    #[error("expected {expected} hash families, got {got}")]
    FamilyCount { expected: usize, got: usize },

    #[error("entry {value} exceeds the group's per-client range of ±{v_max}")]
    GroupOverflow { value: i64, v_max: u64 },

    #[error("group modulus 2^{bits} too small for {clients} clients with entries up to ±{v_max}")]
    GroupTooSmall {
        bits: u32,
        clients: usize,
        v_max: u64,
    },

    #[error("masked set is not a complete round: {0}")]
    Protocol(String),

    #[error("input must be sorted non-increasing")]
    Unsorted,

    #[error("power-law fit failed: {0}")]
    Fit(&'static str),

    #[error("privacy parameters out of regime: {0}")]
    OutOfRegime(&'static str),

    #[error("malformed sketch data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
