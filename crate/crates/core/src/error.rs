use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A path or chain was asked for a value beyond its sampled horizon.
    #[error("horizon error: requested t = {requested}, sampled up to {available}")]
    Horizon { requested: f64, available: f64 },

    /// A precondition on an input field or grid does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Inconsistent grid, kernel or run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// The requested model is outside what a solver handles.
    #[error("unsupported model: {0}")]
    Unsupported(String),

    /// Explicit part of a time-marching scheme would be unstable.
    #[error("stability error: {message} (suggested dt <= {suggested_dt:e})")]
    Stability { message: String, suggested_dt: f64 },

    /// A numerical invariant (positivity, conservation) was violated.
    #[error("numerical invariant violated: {0}")]
    Invariant(String),

    /// Too many Monte Carlo paths exhausted their retry budget.
    #[error("{dropped} of {total} paths exhausted their horizon budget")]
    Exhausted { dropped: usize, total: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }

    /// Short machine-readable tag, used in error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Horizon { .. } => "horizon",
            Error::Precondition(_) => "precondition",
            Error::Config(_) => "config",
            Error::Unsupported(_) => "unsupported",
            Error::Stability { .. } => "stability",
            Error::Invariant(_) => "invariant",
            Error::Exhausted { .. } => "exhausted",
            Error::Empty(_) => "empty",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
