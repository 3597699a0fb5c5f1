use thiserror::Error;

/// Errors produced by the approximation and entropy routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Lebesgue exponent p = {0}: must satisfy 1 < p < inf")]
    InvalidExponent(f64),

    #[error("invalid dimension {0}: must be positive")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("functional undefined at zero")]
    ZeroFunctional,

    #[error("invalid hull exponent q = {0}: must lie in (0, 1]")]
    InvalidHullExponent(f64),

    #[error("atom {index} has norm {norm} exceeding 1")]
    AtomNormTooLarge { index: usize, norm: f64 },

    #[error("empty system")]
    EmptySystem,

    #[error("certified hull distance requires Hilbert case (p = 2), got p = {0}")]
    NotHilbert(f64),

    #[error("recursion check requires hull distance")]
    MissingHullDistance,

    #[error("instance too large for brute force: {atoms} atoms, m = {m}")]
    BruteForceTooLarge { atoms: usize, m: usize },

    #[error("tail bound requires q <= p, got q = {q}, p = {p}")]
    TailExponentOrder { q: f64, p: f64 },

    #[error("ambient mismatch: {0}")]
    AmbientMismatch(String),

    #[error("budget inconsistency: {0}")]
    BudgetInconsistency(String),

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("coverage violated: observed distance {observed} exceeds radius {radius}")]
    CoverageViolated { observed: f64, radius: f64 },

    #[error("insufficient points for rate fit: {0} usable, need at least 3")]
    InsufficientPoints(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
