use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("step size {step} exceeds the delay {delay}; delayed lookup is impossible")]
    StepTooLarge { step: f64, delay: f64 },

    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("time {t} outside the stored range [{t0}, {t1}]")]
    OutOfRange { t: f64, t0: f64, t1: f64 },

    #[error("only {found} peaks detected, at least {needed} required; signal not periodic enough")]
    TooFewPeaks { found: usize, needed: usize },

    #[error("equilibrium not available: {0}")]
    NoEquilibrium(String),

    #[error("no positive fixed point: kappa*g0/alpha = {ratio} <= 1")]
    NoPositiveFixedPoint { ratio: f64 },

    #[error("iteration failed to converge: {0}")]
    NoConvergence(String),

    #[error("{found} roots found but winding number is {winding} (grid too coarse?)")]
    WindingMismatch { found: usize, winding: i64 },

    #[error("heteroclinic profile: {0}")]
    Heteroclinic(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
