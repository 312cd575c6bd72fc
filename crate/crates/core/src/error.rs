use crate::distributions::Family;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyData,
    #[error("dataset contains a non-finite value")]
    NonFiniteData,
    #[error("{0} requires strictly positive data")]
    NonPositiveData(Family),
    #[error("data are degenerate for {0} (zero spread)")]
    DegenerateData(Family),
    #[error("{family} fit did not converge after {iterations} iterations")]
    OptimizerDidNotConverge { family: Family, iterations: usize },
    #[error("invalid {family} parameters: {reason}")]
    InvalidParams { family: Family, reason: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("generator {generator}: {rejections} rejected replicates exceed the cap of {cap}")]
    TooManyRejections {
        generator: usize,
        rejections: usize,
        cap: usize,
    },
    #[error("need at least {needed} rows, got {got}")]
    InsufficientRows { needed: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("covariance matrix is not positive definite after regularization")]
    SingularCovariance,
    #[error("EM failed to produce a finite mixture for k = {k}")]
    EmDidNotConverge { k: usize },
    #[error("likelihood-ratio statistic is negative ({0}); models are not nested as declared")]
    NegativeStatistic(f64),
}
