use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("hypothesis `{0}` has no member reachable by its search strategy")]
    EmptyHypothesis(String),

    #[error("parameter {0:?} lies outside the model domain")]
    OutsideDomain(Vec<f64>),

    #[error("maximum likelihood estimate is on the boundary: {0}")]
    BoundaryMle(String),

    #[error("optimizer did not converge after {iterations} iterations: {context}")]
    NonConvergence { iterations: usize, context: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("covariance matrix is singular or not positive definite")]
    SingularCovariance,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("family of sets is not nested: {0}")]
    NotNested(String),

    #[error("contour cannot be normalized: {0}")]
    Normalization(String),

    #[error("contour is not decreasing along probe ray {direction}: {detail}; use a grid method instead")]
    NotMonotoneAlongRay { direction: usize, detail: String },

    #[error("too many failed Monte Carlo replicates: {failed} of {total}")]
    TooManyRedraws { failed: usize, total: usize },

    #[error("fixture `{name}` does not reproduce its reference statistic: {detail}")]
    FixtureMismatch { name: String, detail: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
