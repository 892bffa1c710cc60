use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("not a contraction: largest singular value {largest} exceeds 1 + {tol}")]
    NotContraction { largest: f64, tol: f64 },

    #[error("embedding breakdown: {0}")]
    EmbeddingBreakdown(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("phase window [{start}, {end}) does not cover sites [0, {needed})")]
    PhaseWindow { start: i64, end: i64, needed: i64 },

    #[error("phase {value} at index {index} lies outside the declared support")]
    PhaseOutsideSupport { index: usize, value: f64 },

    #[error("undefined for g = 1 (q = s = 0): {0}")]
    UnitaryLimit(&'static str),

    #[error("QR iteration did not converge after {sweeps} sweeps (dimension {dim})")]
    NoConvergence { sweeps: usize, dim: usize },

    #[error("eigenpair backward error {worst:e} exceeds tolerance {tol:e}")]
    Inaccurate { worst: f64, tol: f64 },

    #[error("walk support touches the truncation boundary at step {step}")]
    BoundaryReached { step: usize },

    #[error("g check failed: |det C0| = {computed} but the embedding stores g = {stored}")]
    GCheck { computed: f64, stored: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit code: 2 for configuration errors, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotContraction { .. }
            | Error::EmbeddingBreakdown(_)
            | Error::OutOfRange(_)
            | Error::InvalidSize(_)
            | Error::PhaseWindow { .. }
            | Error::PhaseOutsideSupport { .. }
            | Error::Config(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Parse(_) => 2,
            Error::UnitaryLimit(_)
            | Error::NoConvergence { .. }
            | Error::Inaccurate { .. }
            | Error::BoundaryReached { .. }
            | Error::GCheck { .. }
            | Error::Empty(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
