use std::path::PathBuf;

/// Errors raised anywhere in the toolkit.
///
/// Every variant maps onto a short, stable class string (see [`Error::class`])
/// that the command-line driver prints as a machine-parsable error tag.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid wave parameters: {0}")]
    InvalidWaveParams(String),

    #[error("invalid medium: {0}")]
    InvalidMedium(String),

    #[error("invalid boundary patch: {0}")]
    InvalidPatch(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("near resonance: {0}")]
    NearResonance(String),

    #[error("overflow guard: |Re xi| * diam = {value:.3} exceeds {limit}")]
    OverflowGuard { value: f64, limit: f64 },

    #[error("degenerate polarization pair: |eta1 . eta2| = {0:.3e}")]
    DegenerateEta(f64),

    #[error("invalid CGO frame: {0}")]
    InvalidFrame(String),

    #[error("ill-conditioned boundary solve: relative residual {0:.3e}")]
    IllConditioned(f64),

    #[error("coincident points")]
    CoincidentPoints,

    #[error("zero wave number")]
    ZeroWaveNumber,

    #[error("evaluation point within {clearance:.4} of the boundary (minimum {min:.4})")]
    TooCloseToBoundary { clearance: f64, min: f64 },

    #[error("contrast support violation: {0}")]
    SupportViolation(String),

    #[error("infeasible scenario after {0} attempts")]
    Infeasible(usize),

    #[error("inclusion radius {alpha} under-resolved by grid spacing {h}")]
    UnderResolved { alpha: f64, h: f64 },

    #[error("no peaks above threshold")]
    NoPeaks,

    #[error("rank-deficient moment system")]
    RankDeficient,

    #[error("{failed} of {total} Fourier samples failed")]
    TooManyFailures { failed: usize, total: usize },

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("config: {0}")]
    Config(String),

    #[error("format: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable upper-case tag for this error kind.
    pub fn class(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "INVALID_GRID",
            Error::InvalidWaveParams(_) => "INVALID_WAVE",
            Error::InvalidMedium(_) => "INVALID_MEDIUM",
            Error::InvalidPatch(_) => "INVALID_PATCH",
            Error::DimensionMismatch { .. } => "DIMENSION_MISMATCH",
            Error::NearResonance(_) => "NEAR_RESONANCE",
            Error::OverflowGuard { .. } => "OVERFLOW_GUARD",
            Error::DegenerateEta(_) => "DEGENERATE_ETA",
            Error::InvalidFrame(_) => "INVALID_FRAME",
            Error::IllConditioned(_) => "ILL_CONDITIONED",
            Error::CoincidentPoints => "COINCIDENT_POINTS",
            Error::ZeroWaveNumber => "ZERO_WAVE_NUMBER",
            Error::TooCloseToBoundary { .. } => "TOO_CLOSE_TO_BOUNDARY",
            Error::SupportViolation(_) => "SUPPORT_VIOLATION",
            Error::Infeasible(_) => "INFEASIBLE",
            Error::UnderResolved { .. } => "UNDER_RESOLVED",
            Error::NoPeaks => "NO_PEAKS",
            Error::RankDeficient => "RANK_DEFICIENT",
            Error::TooManyFailures { .. } => "TOO_MANY_FAILURES",
            Error::NoConvergence(_) => "NO_CONVERGENCE",
            Error::Config(_) => "CONFIG",
            Error::Format(_) => "FORMAT",
            Error::Io { .. } => "IO",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
