use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample covariance is singular (smallest eigenvalue {min_eigenvalue:e}, largest {max_eigenvalue:e}); need n >= d + 1 and non-collinear data")]
    SingularCovariance {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("gamma = {0} is outside the range covered by the limit theory (gamma > 2); pass allow_small_gamma to override")]
    GammaTooSmall(f64),

    #[error("beta = {0} must exceed 1")]
    BetaTooSmall(f64),

    #[error("invalid tuning parameter: {0}")]
    InvalidParameter(String),

    #[error("exponent {exponent:.3} overflows f64; gamma is too small for the spread of the data")]
    Overflow { exponent: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("statistic requires d = {required}, data has d = {found}")]
    DimensionError { required: usize, found: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("series for E||a - Z|| did not converge for ||a||^2 = {norm_sq}")]
    SeriesNonConvergence { norm_sq: f64 },

    #[error("sample size {n} exceeds the cap {cap} for an O(n^4) statistic")]
    SampleTooLarge { n: usize, cap: usize },

    #[error("invalid alternative specification: {0}")]
    InvalidSpec(String),

    #[error("moment generating function of {0} is not finite near the origin")]
    MgfNotFinite(String),

    #[error("replication {replication} produced a degenerate sample: {source}")]
    DegenerateReplication {
        replication: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    BadRequest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
