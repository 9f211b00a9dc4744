//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("Nyquist violation: grid with {points} points per axis cannot resolve |k|_inf <= {kmax} (need N >= 2*Kmax+1 = {required})")]
    NyquistViolation {
        points: usize,
        kmax: i64,
        required: usize,
    },

    #[error("block index {j} out of range 0..={j_max}")]
    BlockOutOfRange { j: usize, j_max: usize },

    #[error("insufficient table margin: need {needed} beyond the base box, have {have}")]
    InsufficientMargin { needed: i64, have: i64 },

    #[error("memory guard exceeded: request estimates {estimate} bytes, limit {limit}")]
    MemoryGuard { estimate: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("smoothness hypothesis violated: s = {s} must satisfy 0 < s < r = {r}")]
    SmoothnessRange { s: f64, r: f64 },

    #[error("degenerate test family: all denominators below the guard {guard}")]
    DegenerateFamily { guard: f64 },

    #[error("least-squares fit needs at least {needed} usable points, found {found}")]
    TooFewFitPoints { needed: usize, found: usize },
}
