use thiserror::Error;

/// Errors raised by the library. Verification failures are never errors;
/// they are reported through [`crate::verify::SuiteReport`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid cluster: {0}")]
    InvalidCluster(String),

    #[error("exponent out of range: {0}")]
    OutOfRange(String),

    #[error("unsupported relative dimension {0} (requires n >= 3)")]
    UnsupportedDimension(usize),

    #[error("malformed exponent {0:?}")]
    Parse(String),

    #[error("invalid particle system: {0}")]
    InvalidSystem(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular potential evaluation at distance {distance:e} with epsilon = 0")]
    SingularEvaluation { distance: f64 },

    #[error("flattened dimension {dim} exceeds the dense cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("{backend} backend unstable: relative norm drift {drift:e} in one step")]
    Instability { backend: String, drift: f64 },

    #[error("backend {backend} cannot handle this field: {reason}")]
    UnsupportedField { backend: String, reason: String },

    #[error("time span {span} hits a caustic of the {kernel} kernel (bound {bound})")]
    Caustic { kernel: String, span: f64, bound: f64 },

    #[error("boundary contamination {mass:e} exceeds {limit:e} at t = {time}")]
    WindowTooLong { time: f64, mass: f64, limit: f64 },

    #[error("quadrature needs at least 2 intervals, got {0}")]
    QuadratureUnderflow(usize),

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),

    #[error("no contraction on interval of length {length:e}: observed ratio {ratio:.4}")]
    NoContraction { length: f64, ratio: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("Krylov exponential failed to converge: {0}")]
    KrylovFailure(String),

    #[error("grid does not decompose along the cluster frame: {0}")]
    FrameMismatch(String),

    #[error("pair (lambda = {lambda}, sigma = {sigma}) is not admissible for n = {n}")]
    InadmissiblePair { n: usize, lambda: String, sigma: String },

    #[error("decomposition witness does not sum to the trajectory (defect {0:e})")]
    WitnessMismatch(f64),

    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Config(err.to_string())
    }
}
