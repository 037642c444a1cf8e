use thiserror::Error;

/// Failure modes surfaced by the library. Variants carry `f64` diagnostics even
/// when the computation ran at a different scalar precision.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid domain spec: {0}")]
    InvalidSpec(String),

    #[error("boundary not strictly convex: rho(phi = {phi:.6}) = {rho:.3e}")]
    NonConvex { phi: f64, rho: f64 },

    #[error("grid of {grid} points cannot resolve the boundary spectrum (content persists at mode {mode})")]
    UnderResolved { grid: usize, mode: usize },

    #[error("affine frame identity violated: max |det(gamma', gamma'') - 1| = {0:.3e}")]
    FrameIdentity(f64),

    #[error("map is not area-preserving: det = {0:.17e}")]
    NotAreaPreserving(f64),

    #[error("curve is not axially symmetric (reflection residual {0:.3e})")]
    NotAxiallySymmetric(f64),

    #[error("affine curvature routes disagree: formula {formula:.17e} vs determinant {determinant:.17e}")]
    CurvatureMismatch { formula: f64, determinant: f64 },

    #[error("curve is not an ellipse: affine curvature varies by {0:.3e} (relative)")]
    NotAnEllipse(f64),

    #[error("chord (t0 = {t0:.6}, t1 = {t1:.6}) lies outside the positive phase space")]
    OutsidePhaseSpace { t0: f64, t1: f64 },

    #[error("root finding failed: {0}")]
    RootFind(String),

    #[error("orbit solver stalled at q = {q}: reduced gradient {grad:.3e} after {iters} iterations")]
    SolverStalled { q: usize, grad: f64, iters: usize },

    #[error("orbit for q = {q} collapsed: parameters lost monotone ordering")]
    DegenerateOrbit { q: usize },

    #[error("invalid q range [{q_min}, {q_max}]: {reason}")]
    InvalidRange { q_min: usize, q_max: usize, reason: String },

    #[error("least-squares fit ill conditioned: {0}")]
    FitIllConditioned(String),

    #[error("deformation normalization failed: {0}")]
    Normalization(String),

    #[error("tail block at q0 = {q0} is numerically singular (sigma ratio {ratio:.3e}); increase q0")]
    TailBlockSingular { q0: usize, ratio: f64 },

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
