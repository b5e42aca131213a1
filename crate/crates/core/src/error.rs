use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid reproduction law: {0}")]
    InvalidLaw(String),

    #[error("reproduction law is not supercritical (m = {m})")]
    NonSupercritical { m: f64 },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("insufficient horizon: {0}")]
    InsufficientHorizon(String),

    #[error("particle count {count} exceeded cap {cap}")]
    ExplosionGuard { count: usize, cap: usize },

    #[error("population died out at t = {time}")]
    DegenerateEpoch { time: f64 },

    #[error("all particles died at t = {time}")]
    Extinction { time: f64 },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("quadrature failed: estimate {estimate}, error estimate {error}")]
    QuadratureFailure { estimate: f64, error: f64 },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
