use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model or coefficient specification violates its invariants.
    #[error("invalid specification: {0}")]
    Spec(String),

    /// A computation produced a non-finite or otherwise unusable value.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("degenerate covariance: {0}")]
    Degenerate(String),

    #[error("covariance is not Gauss-Markov: {0}")]
    NotMarkov(String),

    /// The relative convergence metric is undefined (zero denominator).
    #[error("convergence metric undefined: {0}")]
    Metric(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
