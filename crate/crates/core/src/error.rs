use thiserror::Error;

/// Errors raised by the model, dynamics and harness layers.
///
/// Values are widened to `f64` so the error type does not depend on the
/// scalar the computation ran with.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: must satisfy {bound} (got {value})")]
    InvalidParameter {
        field: &'static str,
        bound: &'static str,
        value: f64,
    },

    #[error("interference factor P must lie in [0, 1] (got {0})")]
    OutOfRangeP(f64),

    #[error("degenerate parameters: |{denominator}| = {magnitude:e} is within {tolerance:e} of zero")]
    DegenerateParameters {
        denominator: &'static str,
        magnitude: f64,
        tolerance: f64,
    },

    #[error("state became non-finite at t = {time}")]
    NonFiniteState { time: f64 },

    #[error("non-physical state: conjugate-pair residual {residual:e} exceeds {tolerance:e}")]
    NonPhysicalState { residual: f64, tolerance: f64 },

    #[error("singular {system} system (pivot magnitude {pivot:e})")]
    SingularSystem { system: &'static str, pivot: f64 },

    #[error("invalid run setting `{field}`: {reason}")]
    InvalidRun {
        field: &'static str,
        reason: &'static str,
    },

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
