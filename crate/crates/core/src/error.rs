use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A caller broke an operation's precondition (mismatched lengths, eta < 1, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Invalid configuration parameter.
    #[error("configuration error: {0}")]
    Config(String),

    /// A signal or weight went non-finite or exceeded the divergence guard.
    #[error("simulation diverged at step {step}: {reason}")]
    Divergence {
        step: u64,
        reason: String,
        /// Last finite weight vector seen before the failure.
        last_weights: Vec<f64>,
    },

    /// Adaptive identification or inverse modeling blew up.
    #[error("identification failed at iteration {iteration}: {reason}")]
    Identification { iteration: u64, reason: String },

    /// The secondary path is all zeros, so it has no inverse.
    #[error("secondary path has no inverse (all taps zero)")]
    NoInverse,

    /// A power-gain frame carried no predicted-control energy.
    #[error("degenerate frame: predicted control energy is zero")]
    DegenerateFrame,

    /// A linear system was singular or too ill-conditioned to solve.
    #[error("singular system (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
