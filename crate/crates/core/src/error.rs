use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown ensemble kind `{0}`")]
    UnknownKind(String),

    #[error("degree {degree} exceeds the supported maximum {max} for this ensemble")]
    DegreeOverflow { degree: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("squared radius must be finite and nonnegative, got {0}")]
    InvalidRadius(f64),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("expansion pole: |t - kappa| = {gap:e} is below the guard {guard:e}")]
    ExpansionPole { gap: f64, guard: f64 },

    #[error("{0}")]
    Unsupported(String),

    #[error("resample budget exceeded: {flagged} of {trials} trials flagged")]
    ResampleBudget { flagged: usize, trials: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
