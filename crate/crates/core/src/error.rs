use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported Daubechies order {0} (embedded tables cover 1..=10)")]
    UnsupportedOrder(usize),

    #[error("invalid signal length {0}: expected a power of two, at least 2")]
    InvalidLength(usize),

    #[error("invalid pyramid: {0}")]
    InvalidPyramid(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid spectrum curve: {0}")]
    InvalidCurve(String),

    #[error("inadmissible spectrum: {0}")]
    Inadmissible(String),

    #[error("invalid log-density: {0}")]
    InvalidDensity(String),

    #[error("kernel validity violated: {0}")]
    KernelValidity(String),

    #[error("{0} kernel has no validity threshold")]
    UnsupportedVariant(&'static str),

    #[error("flat spectrum: rho <= 0 everywhere but rho = 0 at alpha = {h_min}; d(h) = 0 for h >= h_min and the almost-everywhere exponent is infinite")]
    FlatSpectrum { h_min: f64 },

    #[error("empty spectrum: rho < 0 everywhere, the process is almost surely C-infinity")]
    EmptySpectrum,

    #[error("scale law total mass {mass} exceeds 1 at scale {j}")]
    MassExceedsOne { j: usize, mass: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("scale {j} out of range (available 1..={max})")]
    ScaleOutOfRange { j: usize, max: usize },

    #[error("insufficient scales: {available} usable, need at least {needed}")]
    InsufficientScales { available: usize, needed: usize },

    #[error("degenerate level {0}: every coefficient is zero")]
    DegenerateLevel(usize),

    #[error("tau does not change sign on the q grid")]
    NoCriticalQ,

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of mathematical validity (thresholds, admissibility,
    /// degenerate data) as opposed to malformed input.
    pub fn is_validity(&self) -> bool {
        matches!(
            self,
            Error::Inadmissible(_)
                | Error::InvalidDensity(_)
                | Error::KernelValidity(_)
                | Error::FlatSpectrum { .. }
                | Error::EmptySpectrum
                | Error::MassExceedsOne { .. }
                | Error::Domain(_)
                | Error::InsufficientScales { .. }
                | Error::DegenerateLevel(_)
                | Error::NoCriticalQ
        )
    }
}
