use thiserror::Error;

/// Errors raised by the simulation and estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violated one of its documented invariants.
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// Two grids that must coincide do not.
    #[error("axis mismatch: {0}")]
    AxisMismatch(String),

    /// A frame or buffer did not have the length expected by the consumer.
    #[error("shape mismatch: expected {expected} samples, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("need at least {needed} frames, have {got}")]
    InsufficientFrames { needed: usize, got: usize },

    /// Requested estimator output is not held by the accumulator mode.
    #[error("accumulator does not hold {0}")]
    NotAccumulated(String),

    #[error("every point of the pattern is masked: {0}")]
    AllMasked(String),

    #[error("grid of {n} points exceeds the limit of {max} for {what}")]
    GridTooLarge { what: &'static str, n: usize, max: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no half-maximum crossing found on the {0} side of the peak")]
    NoCrossing(&'static str),

    #[error("peak windows overlap: orders {0} and {1}")]
    OverlappingWindows(i32, i32),

    #[error("window around order {0} contains no samples")]
    EmptyWindow(i32),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
