//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two buffers that must share a length do not.
    #[error("length mismatch: {context}: expected {expected}, got {actual}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A site contributes watermark energy but its channel variance is zero,
    /// so the per-site noise model is singular.
    #[error("degenerate channel at site {site}: zero variance with nonzero watermark gain")]
    DegenerateChannel { site: usize },

    /// No site carries any watermark energy, so extraction is impossible.
    #[error("no watermark energy: gamma * alpha is zero at every site")]
    NoWatermarkEnergy,

    /// A calibration target lies outside the achievable range.
    #[error("infeasible budget: target {target} outside achievable range [{lo}, {hi}]")]
    InfeasibleBudget { target: f64, lo: f64, hi: f64 },

    /// A closed-form expression was requested outside its validity region.
    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    /// Configuration text could not be parsed.
    #[error("config error: {0}")]
    Config(String),

    /// Image data violated the supported PGM subset or dimensions.
    #[error("image error: {0}")]
    Image(String),

    /// An underlying I/O operation failed.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Convenience constructor for [`Error::InvalidArgument`].
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn messages_name_the_failure() {
        let e = Error::DegenerateChannel { site: 3 };
        assert!(e.to_string().contains("site 3"));
        let e = Error::LengthMismatch {
            context: "weights",
            expected: 4,
            actual: 2,
        };
        assert!(e.to_string().contains("expected 4"));
        let e = Error::InfeasibleBudget {
            target: 5.0,
            lo: 0.0,
            hi: 1.0,
        };
        assert!(e.to_string().contains("5"));
    }
}
