use thiserror::Error;

/// Errors raised by channel construction, bound evaluation and simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fading values must be strictly increasing")]
    NotStrictlyIncreasing,

    #[error("channel is not normalized (state power {state_power}, expected 1)")]
    NotNormalized { state_power: f64 },

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("degenerate conditioning: {0}")]
    DegenerateConditioning(String),

    #[error("no information: all fading amplitudes are zero")]
    NoInformation,

    #[error("divergent value: {0}")]
    Divergence(String),

    #[error("fading set is outside the strong fading regime ({0})")]
    RegimeViolation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unknown coordinate label `{0}`")]
    UnknownLabel(String),

    #[error("too few samples: {got} < {min}")]
    TooFewSamples { got: usize, min: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite and > 0, got {value}"
        )))
    }
}

pub(crate) fn ensure_nonnegative(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite and >= 0, got {value}"
        )))
    }
}
