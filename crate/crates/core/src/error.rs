use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the discretization and solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid surface: {0}")]
    InvalidSurface(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("band is empty: no lattice node lies within the tube (h = {h})")]
    EmptyBand { h: f64 },

    #[error("interpolation offset {t} outside [0, {p}]")]
    StencilPlacement { t: f64, p: usize },

    #[error("band construction bug: {0}")]
    Band(String),

    #[error("partition error: {0}")]
    Partition(String),

    #[error("subdomain {subdomain}: {message}")]
    Subdomain { subdomain: usize, message: String },

    #[error("subdomain {subdomain}: singular pivot at elimination step {step}")]
    SingularPivot { subdomain: usize, step: usize },

    #[error("transmission setup error: {0}")]
    Transmission(String),

    #[error("iteration diverged at iteration {iteration} (residual {residual:e})")]
    Divergence { iteration: usize, residual: f64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {}: line {line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
