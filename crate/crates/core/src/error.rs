use std::path::PathBuf;

use crate::trace::ForceTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A physical quantity is outside its admissible range.
    #[error("{quantity} = {value} is out of range: {requirement}")]
    Domain {
        quantity: &'static str,
        value: f64,
        requirement: &'static str,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// The contact Jacobian is (numerically) singular and the operation needs its inverse.
    #[error("singular configuration: |det J| = {det:.3e} <= {tolerance:.3e}")]
    SingularConfiguration { det: f64, tolerance: f64 },

    /// The simulation horizon ran out before the contact released. Carries the
    /// trace recorded so far.
    #[error("horizon t_max = {t_max} s exceeded before {stage}")]
    HorizonExceeded {
        t_max: f64,
        stage: &'static str,
        partial: Box<ForceTrace>,
    },

    #[error("invalid trace at sample {index}: {message}")]
    InvalidTrace { index: usize, message: String },

    #[error("trace has {found} samples, at least {required} are needed")]
    TooFewSamples { found: usize, required: usize },

    #[error("no contact found in trace")]
    NoContact,

    #[error("trace holds {episodes} separate contact episodes")]
    AmbiguousContact { episodes: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(quantity: &'static str, value: f64, requirement: &'static str) -> Self {
        Error::Domain {
            quantity,
            value,
            requirement,
        }
    }
}

/// Checks `value > 0` and finite.
pub(crate) fn positive(quantity: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::domain(quantity, value, "must be finite and > 0"))
    }
}

/// Checks `value >= 0` and finite.
pub(crate) fn non_negative(quantity: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::domain(quantity, value, "must be finite and >= 0"))
    }
}
