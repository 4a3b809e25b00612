use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used for CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: invalid parameters, out-of-range arguments, malformed files.
    Validation,
    /// The numerics failed: non-finite samples, tolerances not met.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time {t} outside trajectory range [0, {t_max}]")]
    TimeOutOfRange { t: f64, t_max: f64 },

    #[error("associated Laguerre L_{n}^({k}) undefined: n + k < 0")]
    LaguerreIndex { n: usize, k: i64 },

    #[error("deformation f({n}) is singular: {reason}")]
    DeformationSingular { n: usize, reason: String },

    #[error("truncation {truncation} too small: tail bound {tail:e} exceeds {limit:e}")]
    TruncationTail { truncation: usize, tail: f64, limit: f64 },

    #[error("operation requires a {expected} state")]
    WrongStateKind { expected: &'static str },

    #[error("degenerate quadrature direction: μ = ν = 0")]
    DegenerateDirection,

    #[error("non-finite sample in quadrature at {location}")]
    NonFinite { location: String },

    #[error("imaginary residue {residue:e} exceeds {limit:e}")]
    ImaginaryResidue { residue: f64, limit: f64 },

    #[error("degenerate tomogram: all samples vanish")]
    DegenerateTomogram,

    #[error("malformed tomogram data: {0}")]
    MalformedTomogram(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NonFinite { .. }
            | Error::ImaginaryResidue { .. }
            | Error::TruncationTail { .. }
            | Error::DeformationSingular { .. } => ErrorKind::Numerical,
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
