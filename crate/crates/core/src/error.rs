use std::path::PathBuf;

use thiserror::Error;

use crate::grid::PlantSnapshot;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed configuration text, with a locator where one is available.
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    /// A configuration value violates a documented invariant.
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("load profile {path}: {message}")]
    LoadProfile { path: PathBuf, message: String },

    /// The plant left the configured frequency sanity band; the run is aborted.
    #[error("frequency sanity limit exceeded at t = {time_s} s: {snapshot:?}")]
    SanityLimit { time_s: f64, snapshot: Box<PlantSnapshot> },

    #[error("metrics: {0}")]
    Metrics(String),

    #[error("sweep: {0}")]
    Sweep(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
