use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum BellError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("scenario mismatch: {left} vs {right}")]
    ScenarioMismatch { left: String, right: String },

    #[error("invalid behavior: {0}")]
    InvalidBehavior(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("mixed numeric policies (exact and float) in one computation")]
    MixedPolicy,

    #[error("operation requires exact rational values")]
    NotExact,

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("not a valid inequality: maximum over vertices {max} exceeds bound {bound}")]
    NotValidInequality { max: String, bound: String },

    #[error("unknown inequality `{0}`")]
    UnknownInequality(String),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("root bracketing failed on [{lo}, {hi}]: residuals {f_lo} and {f_hi} share a sign")]
    Bracketing { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("numeric breakdown: {0}")]
    NumericBreakdown(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BellError {
    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, BellError::NumericBreakdown(_) | BellError::Bracketing { .. })
    }
}

pub type Result<T, E = BellError> = std::result::Result<T, E>;
