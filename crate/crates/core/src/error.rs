use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch { expected: Vec<usize>, found: Vec<usize> },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("negative rate {rate} for channel `{channel}`")]
    NegativeRate { channel: String, rate: f64 },

    #[error("no resonance: renormalized frequency {omega0_prime} does not exceed drive {rabi}")]
    NoResonance { omega0_prime: f64, rabi: f64 },

    #[error("operator is not Hermitian (max |A - A^dag| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error(
        "step size underflow at t = {time:.6e} s (h = {step:.3e} s); the generator's fastest \
         frequency is about {fastest_frequency:.3e} rad/s"
    )]
    Stiffness { time: f64, step: f64, fastest_frequency: f64 },

    #[error("integration exceeded {max_steps} steps before t = {time:.6e} s")]
    TooManySteps { max_steps: usize, time: f64 },

    #[error("Liouvillian has {count} (near-)zero modes; the steady state is not unique")]
    MultipleSteadyStates { count: usize },

    #[error("steady-state solve is ill-conditioned (pivot ratio {estimate:.3e})")]
    IllConditioned { estimate: f64 },

    #[error("correlation undefined: mean phonon number {mean:.3e} is vanishing")]
    UndefinedCorrelation { mean: f64 },

    #[error("time average did not converge: `{observable}` drifted by {drift:.3e} between windows")]
    NotConverged { observable: String, drift: f64 },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
