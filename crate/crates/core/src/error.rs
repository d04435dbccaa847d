use std::path::PathBuf;

use crate::camera::NormalizedPoint;
use crate::camera::Coefficient;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Inverse distortion did not reach the requested residual.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("undistort did not converge after {iterations} iterations (residual {residual:e}, last iterate ({:.6}, {:.6}))", last.x, last.y)]
pub struct NonConvergence {
    pub target: NormalizedPoint,
    pub last: NormalizedPoint,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    NonConvergence(#[from] NonConvergence),

    #[error("undistort failed at pixel ({u}, {v}): {source}")]
    PixelNonConvergence {
        u: usize,
        v: usize,
        #[source]
        source: NonConvergence,
    },

    #[error("displacement budget exhausted while bounding {coefficient}: fixed coefficients already move the POI {displacement_px:.6} px (budget {budget_px} px)")]
    BudgetExhausted {
        coefficient: Coefficient,
        displacement_px: f64,
        budget_px: f64,
    },

    #[error("no focal scale up to {max_scale} keeps every source sample inside the frame")]
    FocalScaleNotFound { max_scale: f64 },

    #[error("geometry mismatch: expected {expected}, found {found}")]
    GeometryMismatch { expected: String, found: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("image error for {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical machinery (budget or convergence),
    /// as opposed to bad input or I/O.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence(_)
                | Error::PixelNonConvergence { .. }
                | Error::BudgetExhausted { .. }
                | Error::FocalScaleNotFound { .. }
        )
    }
}
