//! Symplectic billiard dynamics in strictly convex planar domains: curve
//! construction from axis data, maximal-area periodic orbits, the area
//! spectrum and its asymptotics, chord-length transforms, and the linearized
//! isospectral operator.

pub mod billiard;
pub mod curve;
pub mod dd;
pub mod deform;
pub mod error;
pub mod fourier;
pub mod hspace;
pub mod mobius;
pub mod operator;
pub mod orbit;
pub mod scalar;
pub mod spectrum;
pub mod verify;

pub use billiard::{lazutkin_defect, step, tangent_antipode, trace, PhaseChord, TraceRow};
pub use curve::{AffineCurve, ConicClass, CurveDiagnostics, DomainSpec, Harmonic, ReferenceEllipse};
pub use dd::DDouble;
pub use deform::{
    action_derivative_check, deformation_map, isospectral_residuals, rank_one_check,
    sample_family, ActionDerivativeCheck, DeformationFamily, DeformationMapReport,
    DeformationSample, FamilyPath, HarmonicRate, IsospectralResiduals, Normalization,
    RankOneVerdict,
};
pub use error::{Error, Result};
pub use fourier::SpectralSeries;
pub use hspace::{zeta, EvenFourierMap, GammaSequence};
pub use mobius::{mobius, mobius_sieve};
pub use operator::{
    apply_t_domain, apply_t_ellipse, bound_suite, ellipse_row_scale, finite_rank_split,
    invert_t_ellipse, kernel_analysis, BoundSuiteReport, BoundViolation, FiniteRankSplit,
    KernelReport, OperatorKind, TruncatedIsospectralOperator,
};
pub use orbit::{ellipse_orbit, max_area_orbit, max_area_orbit_from, orbit_asymptotics, OrbitAsymptotics, SymmetricOrbit};
pub use scalar::Real;
pub use spectrum::{
    chord_weight_profile, correction_functionals, fit_asymptotics, spectrum_table,
    xray_transform, AsymptoticFit, ChordWeightProfile, CorrectionFunctionals, SpectrumRow,
    SpectrumTable,
};
pub use verify::{run_all, run_criterion, CriterionResult, CRITERION_NAMES};

/// Working-precision curve.
pub type Curve = AffineCurve<f64>;
/// Single-precision curve, for storage-bound sweeps.
pub type Curve32 = AffineCurve<f32>;
/// Extended-precision curve, for measurements near the f64 noise floor.
pub type CurveDD = AffineCurve<DDouble>;
/// Working-precision orbit.
pub type Orbit = SymmetricOrbit<f64>;
