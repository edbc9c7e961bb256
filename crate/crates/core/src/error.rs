use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("ring too small: {0} wells (need at least 3)")]
    RingTooSmall(usize),

    #[error("dimension mismatch: expected {expected} entries, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("polar form is singular: population of well {well} is {population}")]
    PolarSingularity { well: usize, population: f64 },

    #[error("winding number undefined: well {0} is empty")]
    UndefinedWinding(usize),

    #[error("resonance formula only holds for 4 wells (got {0}); use the measured linear resonance instead")]
    FormulaDomain(usize),

    #[error("self-confinement criterion undefined at n = 0")]
    ZeroImbalance,

    #[error("self-confinement criterion out of domain: tangent argument {argument} >= pi/2")]
    OutOfDomain { argument: f64 },

    #[error("no root found: {0}")]
    RootNotFound(String),

    #[error("integration diverged after t = {last_good_time} (1/omega_R)")]
    Divergence { last_good_time: f64 },

    #[error("step size underflow at t = {time} (1/omega_R): h = {step}")]
    Stiffness { time: f64, step: f64 },

    #[error("transfer {segment} stalled: no flux reversal within {timeout} (1/omega_R) of t = {started}")]
    StalledTransfer { segment: usize, started: f64, timeout: f64 },

    #[error("norm drift {drift:e} exceeds limit {limit:e} (relative to N_T)")]
    NormDrift { drift: f64, limit: f64 },

    #[error("non-uniform sampling at index {index}: resample before spectral analysis")]
    NonUniformSampling { index: usize },

    #[error("too few samples: {got} (need at least {need})")]
    TooFewSamples { got: usize, need: usize },

    #[error("no spectral peak above the noise floor")]
    NoSpectralPeak,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    /// True for errors that come from a malformed or inconsistent configuration.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::InvalidParameter { .. } | Error::RingTooSmall(_) | Error::Dimension { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
