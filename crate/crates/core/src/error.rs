use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("bodies {i} and {j} collide (distance {distance:e})")]
    Collision { i: usize, j: usize, distance: f64 },

    #[error("solver failed: {0}")]
    NoConvergence(String),

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("eigenvalue tracking lost at step {step} (parameter {parameter}, overlap {overlap:.3})")]
    TrackingLost { step: usize, parameter: f64, overlap: f64 },

    #[error("no sign change of the tracked eigenvalue in [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("branch has no parameter turning point")]
    NoTurningPoint,

    #[error("continuation step underflow at parameter {parameter}")]
    StepUnderflow { parameter: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
