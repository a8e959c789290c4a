use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    NodeOutOfRange(usize, usize, usize),
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) has non-positive weight {2}")]
    NonPositiveWeight(usize, usize, f64),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("node {0} has no outgoing edges")]
    SinkNode(usize),
    #[error("no node is reachable from every other node")]
    NotCoReachable,
    #[error("graph must have at least {0} nodes")]
    TooFewNodes(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix dimension {n} exceeds the dense limit {limit}")]
    SizeLimitExceeded { n: usize, limit: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
        /// Best iterate reached before giving up, when the method has one.
        best: Option<Vec<f64>>,
    },

    #[error("sample index {0} out of range for {1} nodes")]
    SampleOutOfRange(usize, usize),
    #[error("sample set is empty")]
    EmptySampleSet,
    #[error("invalid budget {budget} for {n} nodes")]
    InvalidBudget { budget: usize, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid regime: {0}")]
    InvalidRegime(String),
    #[error("second smallest eigenvalue {0:e} is numerically zero")]
    DegenerateSpectrum(f64),
    #[error("signal is constant")]
    ConstantSignal,

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
