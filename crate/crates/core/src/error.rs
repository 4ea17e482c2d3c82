use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("diagonal entry {index} has imaginary residue {imag:e}")]
    NonRealDiagonal { index: usize, imag: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("gamma shape {0} is below 0.5")]
    InvalidShape(f64),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("correlation coefficient {rho} outside [0, {max}]")]
    RhoOutOfRange { rho: f64, max: f64 },

    #[error("channel Gram matrix is rank deficient or numerically singular")]
    RankDeficient,

    #[error("high-SNR expansion invalid: stream {stream} has [(snr H^H H)^-1]_kk = {value}")]
    ApproximationInvalid { stream: usize, value: f64 },

    #[error("no samples")]
    EmptySamples,

    #[error("probability {0} outside (0, 1)")]
    BadProbability(f64),

    #[error("invalid configuration field `{field}`: {message}")]
    ConfigInvalid { field: String, message: String },

    #[error("could not parse configuration: {0}")]
    Parse(String),

    #[error("trial {trial}: no acceptable channel draw after {attempts} attempts")]
    TooManyRejections { trial: u64, attempts: u32 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::ConfigInvalid {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// Parse and validation problems are user errors; everything else is a
    /// numerical/runtime failure.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::ConfigInvalid { .. } | Error::Parse(_) | Error::RhoOutOfRange { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
