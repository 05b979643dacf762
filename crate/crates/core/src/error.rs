use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("site {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("length mismatch: {left} vs {right} sites")]
    LengthMismatch { left: usize, right: usize },

    #[error("operator is not Hermitian: {0}")]
    NonHermitian(String),

    #[error("cannot parse Pauli string {0:?}")]
    Parse(String),

    #[error("invalid gate label: {0}")]
    InvalidGate(String),

    #[error("system size must be even and at least 2, got {0}")]
    OddLength(usize),

    #[error("time must be at least 1")]
    ZeroTime,

    #[error("region of width {width} exceeds enumeration cap {cap}")]
    RegionTooLarge { width: usize, cap: usize },

    #[error("spectrum not in the single-qubit table: {0:?}")]
    UnknownSpectrum(Vec<f64>),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("Renyi index alpha = 1 is not supported")]
    AlphaOne,

    #[error("dense oracle limited to {cap} sites, got {n}")]
    OracleTooLarge { n: usize, cap: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
