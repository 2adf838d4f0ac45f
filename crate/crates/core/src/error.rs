use thiserror::Error;

/// Every failure mode raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {point:?} is within {margin} of the chart boundary")]
    Domain { point: Vec<f64>, margin: f64 },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("metric is singular at {0:?}")]
    SingularMetric(Vec<f64>),
    #[error("arrows are not composable: {0}")]
    Composition(String),
    #[error("verticality check failed: residual {0:e}")]
    Tolerance(f64),
    #[error("not a local bisection: {0}")]
    NotABisection(String),
    #[error("base points differ: {0}")]
    BaseMismatch(String),
    #[error("singular linear map: {0}")]
    Singular(String),
    #[error("could not draw composable samples: {0}")]
    Sampling(String),
    #[error("trajectory left the chart box at t = {0}")]
    Escape(f64),
    #[error("local frame degenerated: gram determinant {0:e}")]
    Frame(f64),
    #[error("parallel transport is path dependent: holonomy {0:e}")]
    Flatness(f64),
    #[error("coset normalisation failed: {0}")]
    Slice(String),
    #[error("model is not transitive near {0:?}")]
    Transitivity(Vec<f64>),
    #[error("invalid metric: {0}")]
    Metric(String),
    #[error("connection is not known to be multiplicative: {0}")]
    NotMultiplicative(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
