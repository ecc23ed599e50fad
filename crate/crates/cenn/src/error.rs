use thiserror::Error;

/// Errors produced by the simulation, training, quantization, and
/// hardware-model layers.
#[derive(Debug, Error)]
pub enum CennError {
    #[error("grid dimension mismatch: {expected_width}x{expected_height} vs {got_width}x{got_height}")]
    DimensionMismatch {
        expected_width: usize,
        expected_height: usize,
        got_width: usize,
        got_height: usize,
    },

    #[error("empty grid: width and height must be at least 1")]
    EmptyGrid,

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    #[error("cell state diverged to a non-finite value at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("invalid symmetry pattern: {0}")]
    InvalidPattern(String),

    #[error("parameter vector length {got} does not match expected {expected}")]
    ParamLength { expected: usize, got: usize },

    #[error("arithmetic overflow in {context}")]
    Overflow { context: String },

    #[error("invalid PSO configuration: {0}")]
    InvalidPsoConfig(String),

    #[error("invalid training task: {0}")]
    InvalidTask(String),

    #[error("invalid quantization range: k={k} must not exceed m={m}")]
    InvalidQuantRange { k: i32, m: i32 },

    #[error("no un-quantized parameters left to select")]
    EmptySelection,

    #[error("coefficient {value} is not zero or an exact power of two")]
    NotPowerOfTwo { value: f64 },

    #[error("step size exponent {exponent} outside supported range [-7, 0]")]
    InvalidStepExponent { exponent: i32 },

    #[error("coefficient exponent {exponent} outside supported range [{min}, {max}]")]
    ExponentRange { exponent: i32, min: i32, max: i32 },

    #[error("shifter count {0} is not one of 1, 3, 9")]
    InvalidShifterCount(u32),

    #[error("schedule plans use different shifter counts: {a} vs {b}")]
    MismatchedShifters { a: u32, b: u32 },

    #[error("cycles per pixel is zero")]
    ZeroCycles,

    #[error("baseline computing capacity is zero")]
    ZeroCapacity,

    #[error("invalid budget or calibration: {0}")]
    InvalidBudget(String),

    #[error("malformed PGM data: {0}")]
    PgmFormat(String),

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CennError>;
