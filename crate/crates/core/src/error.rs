use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the formula or model.
    #[error("domain error in `{param}`: {reason}")]
    Domain { param: &'static str, reason: String },

    /// The oscillatory Θ integral loses all precision below `t_min`.
    #[error("t = {t} is below t_min = {t_min}: the oscillatory Θ integral is refused in this regime; use the Monte Carlo oracle instead")]
    SmallTime { t: f64, t_min: f64 },

    /// A quadrature or series did not reach the requested tolerance.
    #[error("accuracy failure in {what}: error estimate {achieved:e} exceeds tolerance {requested:e}")]
    Accuracy {
        what: &'static str,
        achieved: f64,
        requested: f64,
    },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(param: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            param,
            reason: reason.into(),
        }
    }

    /// True for failures of numerical accuracy (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::SmallTime { .. } | Error::Accuracy { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
