use thiserror::Error;

/// Errors raised by the arithmetic, lattice and experiment layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid field specification: {0}")]
    InvalidField(String),

    #[error("field size {q} exceeds the enumeration cap {cap}")]
    FieldTooLarge { q: u64, cap: u64 },

    #[error("operands belong to different fields")]
    FieldMismatch,

    #[error("division by zero")]
    DivisionByZero,

    /// The value is zero only to the tracked precision, so its absolute
    /// value (or inverse) is not determined.
    #[error("indeterminate value: zero to precision {0}")]
    Indeterminate(i64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("enumeration of {states} states exceeds the cap {cap}")]
    CapExceeded { states: u128, cap: u128 },

    #[error("quotient depth {have} is below the depth {need} the event needs")]
    InsufficientDepth { have: u32, need: u32 },

    #[error("insufficient precision: need {required}, have {available}")]
    InsufficientPrecision { required: i64, available: i64 },

    #[error("singular matrix")]
    Singular,

    #[error("matrix is not in the required group or neighbourhood: {0}")]
    OutsideDomain(String),

    #[error("vectors are linearly dependent")]
    Dependent,

    #[error("generators are not saturated in the lattice")]
    NotSaturated,

    #[error("entry is not exact (a Laurent polynomial was required)")]
    NotExact,

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// Carries the best weights (as log_q exponents), threshold and K seen.
    #[error("weight search failed: best K = {best_k} with log_q weights {log_omegas:?}, T = {threshold}")]
    SearchFailed { log_omegas: Vec<i32>, threshold: f64, best_k: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
