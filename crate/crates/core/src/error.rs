use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("control pulses of duration {duration:e} s overlap at spacing {spacing:e} s")]
    OverlappingPulses { duration: f64, spacing: f64 },

    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error:e}")]
    QuadratureNotConverged { estimate: f64, error: f64 },

    #[error("finite-difference step {step:e} underflows against phase magnitude {phase:e}")]
    StepUnderflow { step: f64, phase: f64 },

    #[error("fringe inversion failed: normalized signal {signal:.4} is outside [-1, 1]")]
    FringeInversion { signal: f64 },

    #[error("phase estimate is {offset:.4} rad from the prior guess, outside the pi/2 window")]
    ValidityWindow { offset: f64 },

    #[error("sensitivity undefined: slope {slope:e} is within 2 sigma ({std_error:e}) of zero")]
    ZeroSlope { slope: f64, std_error: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
