use thiserror::Error;

/// Errors surfaced by the numerical layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("step size underflow at x = {x:.6e}")]
    StepSizeUnderflow { x: f64 },

    #[error("non-finite state encountered at x = {x:.6e}")]
    NonFiniteState { x: f64 },

    #[error("quadrature did not converge (remaining error {err:.3e} on [{a:.6e}, {b:.6e}])")]
    QuadratureNonConvergence { a: f64, b: f64, err: f64 },

    #[error("principal-value pole {pole:.6e} outside the integration interval")]
    PoleOutsideInterval { pole: f64 },

    #[error("residue estimate at the pole is non-finite")]
    ResidueNonFinite,

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("averaging window spans {got:.1} oscillation periods, need at least {need:.1}")]
    WindowTooShort { got: f64, need: f64 },

    #[error("tail limit unconverged: window averages still drifting ({detail})")]
    TailUnconverged { detail: String },

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("energy lies in a spectral gap or at a band edge (lambda = {lambda:.9e})")]
    GapOrEdge { lambda: f64 },

    #[error("Bloch eigenvector degenerate: lambda too close to a band edge (|D| = {disc_abs:.9})")]
    NearEdge { disc_abs: f64 },

    #[error("resonance condition violated: {0}")]
    ResonanceCollision(String),

    #[error("degenerate resonance: |integral of psi^2 e^(2i omega t)| = {magnitude:.3e} below threshold")]
    DegenerateResonance { magnitude: f64 },

    #[error("cross-route disagreement: {0}")]
    RouteDisagreement(String),

    #[error("region schedule ordering violated (epsilon too large): {0}")]
    ScheduleOrdering(String),

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("insufficient converged data: {0}")]
    InsufficientData(String),

    #[error("per-sample time budget exceeded at x = {x:.3e}")]
    TimeBudget { x: f64 },

    #[error("growth coefficients below noise floor (amplitude too small to resonate)")]
    GrowthBelowNoise,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
