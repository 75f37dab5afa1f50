use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state has zero norm")]
    ZeroNorm,

    #[error("observable {observable} is not defined for a {family} state")]
    UnsupportedObservable {
        observable: &'static str,
        family: &'static str,
    },

    #[error("{masked_fraction:.3e} of the probability mass lies on masked labels")]
    VanishingDensity { masked_fraction: f64 },

    #[error("doubling the cutoff from {cutoff} moved the result by {relative_shift:.3e} (relative)")]
    CutoffTooSmall { cutoff: usize, relative_shift: f64 },

    #[error("Fisher information matrix is numerically singular (condition {condition:.3e})")]
    SingularInformation { condition: f64 },

    #[error("entropy decreased by {decrease:.3e} at step {step} under pure diffusion")]
    UnstableStep { step: usize, decrease: f64 },

    #[error("grid resolution: {0}")]
    GridResolution(String),

    #[error("{0} is not prime")]
    NotPrime(usize),

    #[error("bases are not mutually complementary (max deviation {deviation:.3e})")]
    NotComplementary { deviation: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("unsupported operation: {0}")]
    Unsupported(&'static str),
}

impl Error {
    /// Short stable name, used by the CLI when mapping failures to exit codes.
    pub fn name(&self) -> &'static str {
        match self {
            Error::ZeroNorm => "ZeroNorm",
            Error::UnsupportedObservable { .. } => "UnsupportedObservable",
            Error::VanishingDensity { .. } => "VanishingDensity",
            Error::CutoffTooSmall { .. } => "CutoffTooSmall",
            Error::SingularInformation { .. } => "SingularInformation",
            Error::UnstableStep { .. } => "UnstableStep",
            Error::GridResolution(_) => "GridResolution",
            Error::NotPrime(_) => "NotPrime",
            Error::NotComplementary { .. } => "NotComplementary",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::InvalidState(_) => "InvalidState",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::Unsupported(_) => "Unsupported",
        }
    }
}
