use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("estimator undefined: {0}")]
    Undefined(String),

    #[error("input not sorted: {0}")]
    Unsorted(String),

    #[error("fit did not converge within {iterations} iterations (last relative cost change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error("curvature matrix is singular; parameters are not identifiable from the data")]
    SingularCurvature,

    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
