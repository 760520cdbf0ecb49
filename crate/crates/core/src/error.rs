use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The Euler-angle chart degenerates at sin(theta) = 0.
    #[error("coordinate singularity: |sin(theta)| = {sin_theta:e} is below the guard")]
    CoordinateSingularity { sin_theta: f64 },

    /// A flow hit the coordinate singularity or produced a non-finite state.
    #[error("flow failed at t = {time}: {reason}")]
    FlowFailure { time: f64, reason: String },

    /// The requested quantity is undefined for these arguments.
    #[error("domain error: {0}")]
    Domain(String),

    /// A finite-difference stencil left the sampled region.
    #[error("stencil error: {0}")]
    Stencil(String),

    /// Normalization of a field with zero total energy.
    #[error("cannot normalize a field with zero energy")]
    ZeroField,
}

pub type Result<T> = std::result::Result<T, Error>;
