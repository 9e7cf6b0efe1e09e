use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("feasible set is empty")]
    Infeasible,

    #[error("polyhedral projection did not terminate within {iterations} active-set steps")]
    ProjectionCycle { iterations: usize },

    #[error(
        "power iteration did not converge in {iterations} iterations (best estimate {estimate})"
    )]
    SpectralNormNotConverged { estimate: f64, iterations: usize },

    #[error("line search failed after trying m = 0..={tried}")]
    LineSearchFailed { tried: usize },

    #[error("line search called with a zero residual")]
    ZeroResidual,

    #[error("half-space normal has zero norm")]
    ZeroNormal,

    #[error("config field `{field}`: {message}")]
    Config {
        field: &'static str,
        message: String,
    },

    #[error("parameters fail the convergence conditions (margin {margin})")]
    ParametersRejected { margin: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: &'static str, message: impl Into<String>) -> Self {
        Error::Config {
            field,
            message: message.into(),
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
