use thiserror::Error;

/// Errors raised by the exponent solvers, the lattice oracle, the simulator
/// and the file front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("invalid probability at index {index}: {value}")]
    InvalidProbability { index: usize, value: f64 },

    #[error("probabilities sum to {sum}, not 1 (tolerance {tol:e})")]
    NotNormalized { sum: f64, tol: f64 },

    #[error("channel row {row} sums to {sum}, not 1 (tolerance {tol:e})")]
    RowNotStochastic { row: usize, sum: f64, tol: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("NaN produced by {0}")]
    NotANumber(&'static str),

    #[error("joint distribution has no mass")]
    ZeroMass,

    #[error("lattice too large: {detail}")]
    GridTooLarge { detail: String },

    #[error("{what} did not converge within {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error(
        "memory budget exceeded: {messages} messages x {cloud} cloud members x 8 bytes \
         + codebook = {required} bytes > budget {budget} bytes (n = {n})"
    )]
    BudgetExceeded {
        required: u128,
        budget: u128,
        messages: u64,
        cloud: u64,
        n: usize,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
