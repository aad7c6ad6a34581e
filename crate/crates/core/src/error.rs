use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be positive")]
    ZeroDimension,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("length {0} is not a triangular number")]
    NotTriangular(usize),

    #[error("index {index} out of range 1..={bound}")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("Lyapunov operator is singular: eigenvalues {0} and {1} sum to zero")]
    SingularLyapunov(String, String),

    #[error("matrix is not Hurwitz (spectral abscissa {0:e})")]
    NotHurwitz(f64),

    #[error("eigenvalue computation did not converge")]
    EigenFailure,

    #[error("{0}")]
    NotDefinite(String),

    #[error("(A, B) is not stabilizable")]
    NotStabilizable,

    #[error("(Q^1/2, A) is not detectable")]
    NotDetectable,

    #[error("Riccati solution failed: {0}")]
    Riccati(String),

    #[error("closed loop lost the Hurwitz property at iteration {iteration} (abscissa {abscissa:e})")]
    LostStability { iteration: usize, abscissa: f64 },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("quadrature did not reach tolerance {tol:e} within horizon {horizon}")]
    Quadrature { tol: f64, horizon: f64 },

    #[error("regressor is rank deficient; singular values {0:?}")]
    RankDeficient(Vec<f64>),

    #[error("not enough samples: {got} rows for {needed} unknowns")]
    TooFewSamples { got: usize, needed: usize },

    #[error("modulation block {0} is singular or ill-conditioned")]
    SingularModulation(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("report has no learning records")]
    EmptyReport,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
