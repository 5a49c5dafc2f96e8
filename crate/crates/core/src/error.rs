use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The Gram matrix of the effective channel in a constrained trace
    /// minimisation is numerically singular.
    #[error("constraint Gram matrix is near singular (condition ratio {ratio:.3e})")]
    NearSingularConstraint { ratio: f64 },

    /// An RF beamformer lost column rank, so the baseband stage is undefined.
    #[error("RF beamformer is rank deficient (singular value ratio {ratio:.3e})")]
    RankDeficientRf { ratio: f64 },

    #[error("interference-plus-noise covariance is singular")]
    SingularNoiseCovariance,

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed matrix file: {0}")]
    Parse(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
