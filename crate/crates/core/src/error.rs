use thiserror::Error;

use crate::numerics::ode::OdeError;
use crate::numerics::quad::QuadratureError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("invalid qubit state: {0}")]
    InvalidState(String),
    #[error("degenerate evolution: total population change {0:e} is below resolution")]
    DegenerateEvolution(f64),
    #[error("time-local coefficients are singular near t = {t} (|A| = {abs_amplitude:e})")]
    CoefficientSingularity { t: f64, abs_amplitude: f64 },
    #[error("no bracket: predicate N > {threshold:e} does not change across [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64, threshold: f64 },
    #[error("unknown figure `{0}`")]
    UnknownFigure(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

impl Error {
    /// Short machine-readable tag for diagnostics.
    pub fn reason(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid-parameter",
            Error::NegativeTime(_) => "negative-time",
            Error::InvalidState(_) => "invalid-state",
            Error::DegenerateEvolution(_) => "degenerate-evolution",
            Error::CoefficientSingularity { .. } => "coefficient-singularity",
            Error::NoBracket { .. } => "no-bracket",
            Error::UnknownFigure(_) => "unknown-figure",
            Error::Quadrature(_) => "quadrature-nonconvergence",
            Error::Ode(_) => "ode-failure",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NegativeTime(t))
    }
}
