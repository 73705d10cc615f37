use thiserror::Error;

pub type Result<T> = std::result::Result<T, VicsekError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VicsekError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    /// The normalised field `J/|J|` was requested where the flux vanishes.
    /// `blowup` is `sup ν/|J|_α` at the offending state (infinite when `J = 0`).
    #[error(
        "singular flux at t = {time}: |J| = {flux_norm:e}{}, sup ν/|J|_α = {blowup:e}",
        particle.map(|p| format!(" (particle {p})")).unwrap_or_default()
    )]
    SingularFlux {
        time: f64,
        particle: Option<usize>,
        flux_norm: f64,
        blowup: f64,
    },

    #[error("degenerate initial flux: inf |J[f0]|_α = {0:e} with α = 0")]
    DegenerateInitialFlux(f64),

    #[error("CFL violation: dt = {dt} exceeds the stable limit {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("no kinetic snapshot covers t = {t} (available range [{start}, {end}])")]
    MissingSnapshot { t: f64, start: f64, end: f64 },

    #[error("threshold eps0 = {eps0} must lie in (0, c*(T) = {c_star})")]
    InvalidThreshold { eps0: f64, c_star: f64 },

    #[error("horizon T = {t} must satisfy 0 <= T < {limit}")]
    InvalidHorizon { t: f64, limit: f64 },

    #[error("empty particle ensemble")]
    EmptyEnsemble,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}
