use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller passed an index, dimension or parameter outside its domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The request is valid but exceeds what a dense routine can handle.
    #[error("capability exceeded: {0}")]
    Capability(String),

    /// Adaptive integration could not continue (step underflow).
    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    /// A conserved quantity drifted beyond its tolerance.
    #[error("integrity violation at t = {t}: {reason}")]
    Integrity { t: f64, reason: String },

    /// Quadrature did not reach the requested tolerance.
    #[error("numerical error: {reason} (achieved error estimate {achieved:e})")]
    Numerical { reason: String, achieved: f64 },

    /// Asymptotic formula evaluated outside its domain of validity.
    #[error("domain error: {0}")]
    Domain(String),

    /// `line` 0 marks a value given on the command line.
    #[error("config error ({}), key `{key}`: {reason}", location(*.line))]
    Config {
        key: String,
        line: usize,
        reason: String,
    },
}

fn location(line: usize) -> String {
    if line == 0 {
        "command line".to_string()
    } else {
        format!("line {line}")
    }
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
