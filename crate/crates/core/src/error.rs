use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A certified error estimate exceeded the tolerance it was checked against.
    #[error("quality error in {what}: bound {bound:e} exceeds tolerance {tolerance:e}")]
    Quality { what: String, bound: f64, tolerance: f64 },

    #[error("solver failure at step {step} (t = {time}): {reason}")]
    Solver {
        step: usize,
        time: f64,
        reason: String,
        /// Last state norm that was still finite, when available.
        last_finite_norm: Option<f64>,
    },

    #[error("initial point {index} failed: {source}")]
    InitialPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("condition {condition} violated at x = {x}, s = {s}: margin {margin:e}")]
    ConditionViolated {
        condition: &'static str,
        x: f64,
        s: f64,
        margin: f64,
    },

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("configuration error: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
