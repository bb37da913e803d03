use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, found {found})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("covariance is asymmetric at ({row}, {col}): {upper} vs {lower}")]
    AsymmetricCovariance {
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
    },

    #[error("covariance diagonal entry {index} is not strictly positive ({value})")]
    NonpositiveDiagonal { index: usize, value: f64 },

    #[error("covariance is not positive definite: pivot {index} = {pivot} is below tolerance {tolerance}")]
    NotPositiveDefinite {
        index: usize,
        pivot: f64,
        tolerance: f64,
    },

    #[error("variance {index} is not strictly positive ({value})")]
    NonpositiveVariance { index: usize, value: f64 },

    #[error("KKT residual {residual} exceeds bound {bound}")]
    KktResidual { residual: f64, bound: f64 },

    #[error("invalid sample set: {0}")]
    InvalidSamples(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
