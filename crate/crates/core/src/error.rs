use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("variance at index {index} is not strictly positive ({value})")]
    NonPositiveVariance { index: usize, value: f64 },

    #[error("at least {needed} rows are required, got {found}")]
    TooFewRows { needed: usize, found: usize },

    #[error("information matrix is singular")]
    SingularInformation,

    #[error("invalid degrees of freedom: {0}")]
    InvalidDegrees(f64),

    #[error("root finder did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("noise scale must be positive, got {0}")]
    NonPositiveSigma(f64),

    #[error("proportion must lie in (0, 1), got {0}")]
    InvalidProportion(f64),

    #[error("probability must lie in (0, 1), got {0}")]
    InvalidProbability(f64),

    #[error("subsample size k = {k} exceeds n = {n}")]
    KLargerThanN { k: usize, n: usize },

    #[error("subsample size k = {k} is too small (need at least {min})")]
    KTooSmall { k: usize, min: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid covariance specification: {0}")]
    InvalidCovariance(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("csv parse error at row {row}, column {column}: {message}")]
    Csv {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("input is empty")]
    EmptyInput,

    #[error("missing series for figure {0}")]
    MissingSeries(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures that stem from the numbers rather than from how the
    /// caller set things up. The CLI maps these to exit code 3.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::SingularInformation
                | Error::NonConvergence { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
