use thiserror::Error;

/// Errors raised while planning, synthesizing or verifying a reflection.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("operator is not unitary (residual {residual:e})")]
    NonUnitary { residual: f64 },

    #[error("complementary polynomial not found: best residual {residual:e} exceeds tolerance {tol:e}")]
    CompletionFailed { residual: f64, tol: f64 },

    #[error("|P|^2 + |Q|^2 deviates from 1 by {residual:e}")]
    NotComplementary { residual: f64 },

    #[error("branch degree {found} does not match planned degree {expected}")]
    DegreeMismatch { expected: usize, found: usize },

    #[error("gap violated: eigenphase {phase} lies within distance {delta} of the target {theta}")]
    GapViolation { phase: f64, theta: f64, delta: f64 },

    #[error("target eigenphase {theta} is not in the spectrum")]
    TargetAbsent { theta: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
