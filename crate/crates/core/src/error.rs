use thiserror::Error;

pub type Result<T> = std::result::Result<T, GofError>;

#[derive(Debug, Error)]
pub enum GofError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported degree {degree} (maximum {max})")]
    UnsupportedDegree { degree: usize, max: usize },

    #[error("insufficient sample: need at least {required} observations, got {got}")]
    InsufficientSample { required: usize, got: usize },

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("Monte Carlo budget {got} is below the minimum of {min}")]
    BudgetTooSmall { got: usize, min: usize },

    /// Even the smallest u on the grid exceeds the target level.
    #[error("calibration failed: smallest grid level {smallest_level} exceeds alpha {alpha}")]
    CalibrationFailure {
        alpha: f64,
        smallest_level: f64,
        level_curve: Vec<f64>,
    },

    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error("missing calibration: {0}")]
    MissingCalibration(String),

    #[error("unknown alternative id `{0}`")]
    UnknownAlternative(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> GofError {
    GofError::InvalidInput(msg.into())
}
