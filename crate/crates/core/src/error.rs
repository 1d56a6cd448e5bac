use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A precondition on the argument domain failed; the message names the
    /// violated inequality.
    #[error("domain violation: {0}")]
    Domain(String),

    #[error("unscaled series overflows at x = {x}; use the scaled evaluator")]
    Overflow { x: f64 },

    #[error("rho window: rho = {rho} is outside (c, 1/c) with c = {c}")]
    RhoWindow { rho: f64, c: f64 },

    #[error("validity conditions failed: {}", .0.join("; "))]
    Validity(Vec<String>),

    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
