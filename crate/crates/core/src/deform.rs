//! One-parameter families of domains: curve generation along harmonic or
//! affine paths, the deformation map measured through central differences,
//! the identity tying it to action derivatives, and the residual battery an
//! action-preserving family has to annihilate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{AffineCurve, DomainSpec, Harmonic};
use crate::error::{Error, Result};
use crate::fourier::SpectralSeries;
use crate::hspace::EvenFourierMap;
use crate::orbit::max_area_orbit;
use crate::spectrum::{correction_functionals, xray_transform};

/// Residual level below which a family counts as annihilating its transform
/// values, and below which a sampled deformation map counts as null.
pub const XRAY_TOL: f64 = 1e-7;

/// Allowed drift of the perimeter along an action-preserving family.
pub const PERIMETER_TOL: f64 = 1e-9;

/// Gauge convention of a family. `FixedPoints` recomposes every curve with
/// the unimodular diagonal-plus-translation map returning the two axis
/// points to their base positions; `Raw` takes the curves as generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    FixedPoints,
    #[default]
    Raw,
}

/// Velocity of one cosine harmonic of the radius of curvature.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HarmonicRate {
    pub j: u32,
    pub delta_dot: f64,
}

/// Path data of a family: per-harmonic amplitude velocities, or a fixed
/// traceless generator applied through its matrix exponential.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilyPath {
    Harmonics(Vec<HarmonicRate>),
    Affine { affine: [[f64; 2]; 2] },
}

/// One-parameter family of domains passing through `base` at tau = 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeformationFamily {
    pub base: DomainSpec,
    pub path: FamilyPath,
    #[serde(default)]
    pub normalization: Normalization,
    /// Closed parameter interval containing 0; None leaves tau unrestricted.
    #[serde(default)]
    pub interval: Option<[f64; 2]>,
}

impl DeformationFamily {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        match &self.path {
            FamilyPath::Harmonics(rates) => {
                for r in rates {
                    if r.j < 2 {
                        return Err(Error::InvalidSpec(format!(
                            "harmonic rate j = {} not allowed: j = 0 rescales, j = 1 breaks closure",
                            r.j
                        )));
                    }
                    if !r.delta_dot.is_finite() {
                        return Err(Error::InvalidSpec(format!(
                            "harmonic rate j = {} has a non-finite velocity",
                            r.j
                        )));
                    }
                }
            }
            FamilyPath::Affine { affine } => {
                let mut scale = 0.0f64;
                for row in affine {
                    for v in row {
                        if !v.is_finite() {
                            return Err(Error::InvalidSpec(
                                "affine generator has non-finite entries".into(),
                            ));
                        }
                        scale = scale.max(v.abs());
                    }
                }
                let trace = affine[0][0] + affine[1][1];
                if trace.abs() > 1e-12 * (1.0 + scale) {
                    return Err(Error::InvalidSpec(format!(
                        "affine generator must be traceless to keep areas, trace = {trace:e}"
                    )));
                }
            }
        }
        if let Some([lo, hi]) = self.interval {
            if !(lo.is_finite() && hi.is_finite() && lo <= 0.0 && 0.0 <= hi) {
                return Err(Error::InvalidSpec(format!(
                    "parameter interval [{lo}, {hi}] must be finite and contain 0"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let family: DeformationFamily = serde_json::from_str(text)
            .map_err(|e| Error::InvalidSpec(format!("bad JSON: {e}")))?;
        family.validate()?;
        Ok(family)
    }

    fn check_tau(&self, tau: f64) -> Result<()> {
        if !tau.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "family parameter must be finite, got {tau}"
            )));
        }
        if let Some([lo, hi]) = self.interval {
            if tau < lo || tau > hi {
                return Err(Error::InvalidSpec(format!(
                    "parameter {tau} leaves the family interval [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Domain at parameter tau, in the family's gauge.
    pub fn curve_at(&self, tau: f64) -> Result<AffineCurve<f64>> {
        self.validate()?;
        self.check_tau(tau)?;
        match &self.path {
            FamilyPath::Harmonics(rates) => {
                let mut spec = self.base.clone();
                for r in rates {
                    match spec.perturbation.iter_mut().find(|h| h.j == r.j) {
                        Some(h) => h.delta += tau * r.delta_dot,
                        None => spec
                            .perturbation
                            .push(Harmonic { j: r.j, delta: tau * r.delta_dot }),
                    }
                }
                let raw = AffineCurve::build(&spec)?;
                match self.normalization {
                    Normalization::Raw => Ok(raw),
                    Normalization::FixedPoints => {
                        let base = AffineCurve::build(&self.base)?;
                        pin_axis_points(raw, &base)
                    }
                }
            }
            FamilyPath::Affine { affine } => {
                let base = AffineCurve::build(&self.base)?;
                let raw = base.apply_affine(exp_generator(affine, tau), [0.0, 0.0])?;
                match self.normalization {
                    Normalization::Raw => Ok(raw),
                    Normalization::FixedPoints => pin_axis_points(raw, &base),
                }
            }
        }
    }
}

/// exp(tau G) for traceless G in closed form. Cayley-Hamilton collapses
/// G^2 to D I with D = -det G, so the exponential is c I + s G with (c, s)
/// hyperbolic, trigonometric, or polynomial by the sign of D; every branch
/// has determinant exactly 1.
fn exp_generator(g: &[[f64; 2]; 2], tau: f64) -> [[f64; 2]; 2] {
    let d = -(g[0][0] * g[1][1] - g[0][1] * g[1][0]);
    let (c, s) = if d > 1e-14 {
        let w = d.sqrt();
        ((w * tau).cosh(), (w * tau).sinh() / w)
    } else if d < -1e-14 {
        let w = (-d).sqrt();
        ((w * tau).cos(), (w * tau).sin() / w)
    } else {
        // both branches degenerate to the same short series as D -> 0
        (1.0 + d * tau * tau / 2.0, tau * (1.0 + d * tau * tau / 6.0))
    };
    [
        [c + s * g[0][0], s * g[0][1]],
        [s * g[1][0], c + s * g[1][1]],
    ]
}

fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// The unique unimodular diagonal-plus-translation gauge returning the two
/// axis points to their base positions. Families whose marked points leave
/// the symmetry axis cannot be pinned this way and must run raw.
fn pin_axis_points(raw: AffineCurve<f64>, base: &AffineCurve<f64>) -> Result<AffineCurve<f64>> {
    let o = base.point(0.0);
    let o_prime = base.point(base.perimeter() / 2.0);
    let a = raw.point(0.0);
    let b = raw.point(raw.perimeter() / 2.0);
    let scale = 1.0f64
        .max(o[0].abs())
        .max(o_prime[0].abs())
        .max(a[0].abs())
        .max(b[0].abs());
    if a[1].abs() > 1e-10 * scale || b[1].abs() > 1e-10 * scale {
        return Err(Error::Normalization(format!(
            "marked points sit off the symmetry axis (y = {:e}, {:e}); run this family raw",
            a[1], b[1]
        )));
    }
    let spread = a[0] - b[0];
    if spread.abs() < 1e-12 * scale {
        return Err(Error::Normalization("marked axis points coincide".into()));
    }
    let lambda = (o[0] - o_prime[0]) / spread;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Normalization(format!(
            "axis gauge needs a positive stretch, got {lambda:e}"
        )));
    }
    let shift = o[0] - lambda * a[0];
    let pinned = raw.apply_affine([[lambda, 0.0], [0.0, 1.0 / lambda]], [shift, 0.0])?;
    // x lands exactly by construction, so the residual lives in y
    let err = dist(pinned.point(0.0), o).max(dist(pinned.point(pinned.perimeter() / 2.0), o_prime));
    if err > 1e-8 * scale {
        return Err(Error::Normalization(format!(
            "axis points refuse to pin, residual {err:e}"
        )));
    }
    Ok(pinned)
}

/// Curves one step to either side of tau. In the pinned gauge the central
/// difference needs matched parameters, so a perimeter split across the
/// step is rejected there.
fn side_curves(
    family: &DeformationFamily,
    tau: f64,
    h: f64,
) -> Result<(AffineCurve<f64>, AffineCurve<f64>)> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "difference step must be positive, got {h}"
        )));
    }
    let plus = family.curve_at(tau + h)?;
    let minus = family.curve_at(tau - h)?;
    if family.normalization == Normalization::FixedPoints {
        let drift = (plus.perimeter() - minus.perimeter()).abs();
        if drift > PERIMETER_TOL * plus.perimeter().max(1.0) {
            return Err(Error::Normalization(format!(
                "perimeters split by {drift:e} across the step; parameters cannot be matched in the pinned gauge"
            )));
        }
    }
    Ok((plus, minus))
}

/// det(dgamma/dtau, dgamma/dt) sampled on the grid of the center curve, the
/// tau-derivative taken as a central difference at matched fraction of each
/// curve's own period. When the perimeters agree this is comparison at equal
/// parameter; when they drift, the fraction matching differs from equal
/// parameter by a purely tangential field, which the determinant kills, and
/// it keeps the samples exactly even.
fn map_samples(
    center: &AffineCurve<f64>,
    plus: &AffineCurve<f64>,
    minus: &AffineCurve<f64>,
    h: f64,
) -> Vec<f64> {
    let m = center.grid();
    let l = center.perimeter();
    let l_plus = plus.perimeter();
    let l_minus = minus.perimeter();
    (0..m)
        .map(|i| {
            let th = i as f64 / m as f64;
            let p = plus.point(th * l_plus);
            let q = minus.point(th * l_minus);
            let v = [(p[0] - q[0]) / (2.0 * h), (p[1] - q[1]) / (2.0 * h)];
            let tan = center.tangent(th * l);
            v[0] * tan[1] - v[1] * tan[0]
        })
        .collect()
}

/// Cosine projection of the samples; returns the map and the largest sine
/// coefficient the projection discarded.
fn project_even(samples: &[f64], gamma: f64) -> (EvenFourierMap, f64) {
    let series = SpectralSeries::from_samples(samples, 1.0);
    let leak = series.odd_part_max();
    let mut coeffs: Vec<f64> = (0..=series.modes()).map(|p| series.cos_coeff(p)).collect();
    let cut = 1e-13 * coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    while coeffs.len() > 1 && coeffs.last().unwrap().abs() <= cut {
        coeffs.pop();
    }
    (EvenFourierMap::new(coeffs, gamma), leak)
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Deformation map with its even-projection leak and a halving estimate of
/// the finite-difference order.
#[derive(Debug, Clone)]
pub struct DeformationMapReport {
    pub tau: f64,
    pub h: f64,
    pub map: EvenFourierMap,
    /// Largest sine coefficient discarded by the even projection.
    pub evenness: f64,
    /// log2 ratio of successive sup differences under h -> h/2 -> h/4; None
    /// when the differences sit at the noise floor.
    pub order: Option<f64>,
}

pub fn deformation_map(
    family: &DeformationFamily,
    tau: f64,
    h: f64,
    gamma: f64,
) -> Result<DeformationMapReport> {
    let center = family.curve_at(tau)?;
    let mut levels = Vec::with_capacity(3);
    for k in 0..3 {
        let hk = h / f64::powi(2.0, k);
        let (plus, minus) = side_curves(family, tau, hk)?;
        levels.push(map_samples(&center, &plus, &minus, hk));
    }
    let floor = 1e-13 * (1.0 + sup_abs(&levels[0]));
    let d1 = sup_diff(&levels[0], &levels[1]);
    let d2 = sup_diff(&levels[1], &levels[2]);
    let order = if d1 > floor && d2 > floor {
        Some((d1 / d2).log2())
    } else {
        None
    };
    let (map, evenness) = project_even(&levels[0], gamma);
    Ok(DeformationMapReport { tau, h, map, evenness, order })
}

/// Action of the polygon with frozen parameters re-evaluated on a displaced
/// curve, the parameters carried over as fractions of the period. The orbit
/// is critical, so this freeze still captures the full parameter derivative:
/// reparametrization moves vertices tangentially, and at a bounce the chord
/// is parallel to the tangent.
fn frozen_action(curve: &AffineCurve<f64>, params: &[f64], period: f64) -> f64 {
    let scale = curve.perimeter() / period;
    let pts: Vec<[f64; 2]> = params.iter().map(|&t| curve.point(t * scale)).collect();
    let q = pts.len();
    (0..q)
        .map(|j| {
            let a = pts[j];
            let b = pts[(j + 1) % q];
            a[0] * b[1] - a[1] * b[0]
        })
        .sum()
}

/// Both sides of the action-derivative identity at one q.
#[derive(Debug, Clone, Copy)]
pub struct ActionDerivativeCheck {
    pub q: usize,
    /// Central difference of the frozen-orbit action across tau +/- h.
    pub finite_difference: f64,
    /// Transform of the deformation map over the same orbit.
    pub transform: f64,
    pub difference: f64,
}

pub fn action_derivative_check(
    family: &DeformationFamily,
    tau: f64,
    q: usize,
    h: f64,
    gamma: f64,
) -> Result<ActionDerivativeCheck> {
    if q < 3 {
        return Err(Error::InvalidRange {
            q_min: q,
            q_max: q,
            reason: "the action derivative needs a genuine polygon (q >= 3)".into(),
        });
    }
    let center = family.curve_at(tau)?;
    let (plus, minus) = side_curves(family, tau, h)?;
    let (map, _) = project_even(&map_samples(&center, &plus, &minus, h), gamma);
    let orbit = max_area_orbit(&center, q)?;
    let l = center.perimeter();
    let finite_difference = (frozen_action(&plus, orbit.params(), l)
        - frozen_action(&minus, orbit.params(), l))
        / (2.0 * h);
    let transform = xray_transform(&center, &orbit, &map);
    Ok(ActionDerivativeCheck {
        q,
        finite_difference,
        transform,
        difference: finite_difference - transform,
    })
}

/// Family snapshot at one parameter value: the map together with both sides
/// of the action-derivative identity for every q in range.
#[derive(Debug, Clone)]
pub struct DeformationSample {
    pub tau: f64,
    pub map: EvenFourierMap,
    pub evenness: f64,
    /// (q, transform of the map over the maximal orbit)
    pub xray: Vec<(usize, f64)>,
    /// (q, frozen-orbit central difference of the action)
    pub derivatives: Vec<(usize, f64)>,
}

pub fn sample_family(
    family: &DeformationFamily,
    tau: f64,
    q_max: usize,
    h: f64,
    gamma: f64,
) -> Result<DeformationSample> {
    if q_max < 3 {
        return Err(Error::InvalidRange {
            q_min: 3,
            q_max,
            reason: "family sampling needs q_max >= 3".into(),
        });
    }
    let center = family.curve_at(tau)?;
    let (plus, minus) = side_curves(family, tau, h)?;
    let (map, evenness) = project_even(&map_samples(&center, &plus, &minus, h), gamma);
    let l = center.perimeter();
    let rows: Result<Vec<(usize, f64, f64)>> = (3..=q_max)
        .into_par_iter()
        .map(|q| {
            let orbit = max_area_orbit(&center, q)?;
            let fd = (frozen_action(&plus, orbit.params(), l)
                - frozen_action(&minus, orbit.params(), l))
                / (2.0 * h);
            Ok((q, xray_transform(&center, &orbit, &map), fd))
        })
        .collect();
    let rows = rows?;
    Ok(DeformationSample {
        tau,
        map,
        evenness,
        xray: rows.iter().map(|r| (r.0, r.1)).collect(),
        derivatives: rows.iter().map(|r| (r.0, r.2)).collect(),
    })
}

/// Everything an action-preserving family must annihilate at one tau.
#[derive(Debug, Clone)]
pub struct IsospectralResiduals {
    pub tau: f64,
    /// Mean coefficient of the deformation map.
    pub mean_coeff: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub xray: Vec<(usize, f64)>,
    /// Perimeter drift against the base curve.
    pub perimeter_shift: f64,
    /// True when every residual sits below tolerance.
    pub consistent: bool,
}

pub fn isospectral_residuals(
    family: &DeformationFamily,
    tau: f64,
    q_max: usize,
    h: f64,
    gamma: f64,
) -> Result<IsospectralResiduals> {
    let sample = sample_family(family, tau, q_max, h, gamma)?;
    let center = family.curve_at(tau)?;
    let base = family.curve_at(0.0)?;
    let corr = correction_functionals(&center, &sample.map);
    let mean_coeff = sample.map.coeff(0);
    let perimeter_shift = center.perimeter() - base.perimeter();
    let worst_xray = sample.xray.iter().fold(0.0f64, |m, r| m.max(r.1.abs()));
    let consistent = worst_xray <= XRAY_TOL
        && perimeter_shift.abs() <= PERIMETER_TOL
        && mean_coeff.abs() <= XRAY_TOL
        && corr.alpha1.abs() <= XRAY_TOL
        && corr.alpha2.abs() <= XRAY_TOL;
    Ok(IsospectralResiduals {
        tau,
        mean_coeff,
        alpha1: corr.alpha1,
        alpha2: corr.alpha2,
        xray: sample.xray,
        perimeter_shift,
        consistent,
    })
}

/// Outcome of the rigidity spot check on a family with a null map.
#[derive(Debug, Clone)]
pub enum RankOneVerdict {
    /// The map vanished at every sampled tau and the boundaries coincide up
    /// to the reported distance.
    Rigid { distance: f64 },
    /// The map is visibly nonzero, so the vanishing criterion says nothing.
    NotApplicable { tau: f64, map_sup: f64 },
}

/// Checks that a family whose deformation map vanishes does not move the
/// boundary: the distance is a two-sided sup over dense boundary samples
/// projected onto the other boundary's polyline.
pub fn rank_one_check(
    family: &DeformationFamily,
    taus: &[f64],
    h: f64,
) -> Result<RankOneVerdict> {
    let base = family.curve_at(0.0)?;
    let mut distance = 0.0f64;
    for &tau in taus {
        let center = family.curve_at(tau)?;
        let (plus, minus) = side_curves(family, tau, h)?;
        let sup = sup_abs(&map_samples(&center, &plus, &minus, h));
        if sup > XRAY_TOL {
            return Ok(RankOneVerdict::NotApplicable { tau, map_sup: sup });
        }
        distance = distance.max(boundary_distance(&base, &center, 1024));
    }
    Ok(RankOneVerdict::Rigid { distance })
}

fn boundary_samples(c: &AffineCurve<f64>, m: usize) -> Vec<[f64; 2]> {
    let l = c.perimeter();
    (0..m).map(|i| c.point(l * i as f64 / m as f64)).collect()
}

// distance to the segment keeps the polyline error quadratic in the spacing
fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let w = [p[0] - a[0], p[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let s = if len2 > 0.0 {
        ((w[0] * d[0] + w[1] * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, [a[0] + s * d[0], a[1] + s * d[1]])
}

fn one_sided(from: &[[f64; 2]], to: &[[f64; 2]]) -> f64 {
    let m = to.len();
    from.iter()
        .map(|&p| {
            (0..m)
                .map(|j| segment_distance(p, to[j], to[(j + 1) % m]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0f64, f64::max)
}

fn boundary_distance(a: &AffineCurve<f64>, b: &AffineCurve<f64>, m: usize) -> f64 {
    let pa = boundary_samples(a, m);
    let pb = boundary_samples(b, m);
    one_sided(&pa, &pb).max(one_sided(&pb, &pa))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAMMA: f64 = 3.5;

    fn circle_base(grid: usize) -> DomainSpec {
        DomainSpec::circle().with_grid(grid)
    }

    fn harmonic_family(base: DomainSpec, j: u32, rate: f64) -> DeformationFamily {
        DeformationFamily {
            base,
            path: FamilyPath::Harmonics(vec![HarmonicRate { j, delta_dot: rate }]),
            normalization: Normalization::Raw,
            interval: None,
        }
    }

    fn affine_family(base: DomainSpec, g: [[f64; 2]; 2]) -> DeformationFamily {
        DeformationFamily {
            base,
            path: FamilyPath::Affine { affine: g },
            normalization: Normalization::Raw,
            interval: None,
        }
    }

    #[test]
    fn family_json_round_trips() {
        let text = r#"{
            "base": {"a": 1.0, "b": 1.0, "perturbation": [], "grid_size": 256},
            "path": [{"j": 4, "delta_dot": 1.0}],
            "normalization": "raw"
        }"#;
        let family = DeformationFamily::from_json(text).unwrap();
        assert_eq!(family.normalization, Normalization::Raw);
        match &family.path {
            FamilyPath::Harmonics(rates) => {
                assert_eq!(rates.len(), 1);
                assert_eq!(rates[0].j, 4);
            }
            FamilyPath::Affine { .. } => panic!("expected a harmonic path"),
        }
        let echoed = serde_json::to_string(&family).unwrap();
        assert!(echoed.contains("delta_dot"));
        DeformationFamily::from_json(&echoed).unwrap();

        let affine_text = r#"{
            "base": {"a": 1.5, "b": 0.8},
            "path": {"affine": [[1.0, 0.0], [0.0, -1.0]]},
            "normalization": "fixed-points"
        }"#;
        let family = DeformationFamily::from_json(affine_text).unwrap();
        assert_eq!(family.normalization, Normalization::FixedPoints);
        assert!(matches!(family.path, FamilyPath::Affine { .. }));

        // omitted normalization defaults to raw
        let bare = r#"{"base": {"a": 1.0, "b": 1.0}, "path": []}"#;
        assert_eq!(
            DeformationFamily::from_json(bare).unwrap().normalization,
            Normalization::Raw
        );

        let bad_harmonic = r#"{"base": {"a": 1.0, "b": 1.0}, "path": [{"j": 1, "delta_dot": 0.1}]}"#;
        assert!(matches!(
            DeformationFamily::from_json(bad_harmonic),
            Err(Error::InvalidSpec(_))
        ));
        let bad_trace = r#"{"base": {"a": 1.0, "b": 1.0}, "path": {"affine": [[1.0, 0.0], [0.0, 1.0]]}}"#;
        assert!(matches!(
            DeformationFamily::from_json(bad_trace),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn constant_family_is_flat() {
        let family = DeformationFamily {
            base: DomainSpec::ellipse(1.3, 0.9).with_harmonic(3, 0.005).with_grid(256),
            path: FamilyPath::Harmonics(Vec::new()),
            normalization: Normalization::Raw,
            interval: None,
        };
        let report = deformation_map(&family, 0.1, 1e-4, GAMMA).unwrap();
        assert_eq!(report.map.top_mode(), 0);
        assert!(report.map.coeff(0).abs() < 1e-12);
        assert!(report.evenness < 1e-12);
        assert!(report.order.is_none(), "exact family has no order signal");

        let res = isospectral_residuals(&family, 0.1, 8, 1e-4, GAMMA).unwrap();
        assert!(res.consistent);
        assert_eq!(res.perimeter_shift, 0.0);

        match rank_one_check(&family, &[-0.2, 0.1, 0.3], 1e-4).unwrap() {
            RankOneVerdict::Rigid { distance } => assert!(distance < 1e-13),
            RankOneVerdict::NotApplicable { .. } => panic!("map should vanish"),
        }
    }

    #[test]
    fn rotation_family_fixes_the_circle() {
        let family = affine_family(circle_base(256), [[0.0, -1.0], [1.0, 0.0]]);
        let report = deformation_map(&family, 0.0, 1e-4, GAMMA).unwrap();
        let sup: f64 = (0..257)
            .map(|i| report.map.eval(i as f64 / 257.0).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-11, "tangential motion leaves no map, sup {sup:e}");

        let check = action_derivative_check(&family, 0.0, 5, 1e-4, GAMMA).unwrap();
        assert!(check.finite_difference.abs() < 1e-9);
        assert!(check.transform.abs() < 1e-9);

        match rank_one_check(&family, &[0.4, -0.7], 1e-4).unwrap() {
            RankOneVerdict::Rigid { distance } => {
                assert!(distance < 1e-5, "rotated circle is the same set, distance {distance:e}");
            }
            RankOneVerdict::NotApplicable { .. } => panic!("map should vanish"),
        }
    }

    #[test]
    fn squeezing_the_circle_excites_the_second_harmonic() {
        let family = affine_family(circle_base(256), [[1.0, 0.0], [0.0, -1.0]]);
        let report = deformation_map(&family, 0.0, 1e-4, GAMMA).unwrap();
        assert!((report.map.coeff(2) - 1.0).abs() < 1e-8, "coeff {}", report.map.coeff(2));
        let rest: f64 = (0..=report.map.top_mode())
            .filter(|&p| p != 2)
            .map(|p| report.map.coeff(p).abs())
            .fold(0.0, f64::max);
        assert!(rest < 1e-10);
        assert!(report.evenness < 1e-12);
        let order = report.order.expect("quadratic signal is visible");
        assert!((1.6..2.4).contains(&order), "order {order}");

        match rank_one_check(&family, &[0.1], 1e-4).unwrap() {
            RankOneVerdict::NotApplicable { map_sup, .. } => {
                assert!((map_sup - 1.0).abs() < 1e-6);
            }
            RankOneVerdict::Rigid { .. } => panic!("squeeze has a visible map"),
        }
    }

    #[test]
    fn squeezing_an_ellipse_keeps_the_spectrum_but_moves_the_point_row() {
        let family = affine_family(
            DomainSpec::ellipse(1.5, 0.8).with_grid(512),
            [[1.0, 0.0], [0.0, -1.0]],
        );
        let res = isospectral_residuals(&family, 0.0, 10, 1e-4, GAMMA).unwrap();
        assert!(res.consistent, "xray {:?}", res.xray);
        assert_eq!(res.perimeter_shift, 0.0);
        assert!(res.mean_coeff.abs() < 1e-9);

        // the map itself is far from zero at the marked point: the family
        // breaks the pinned gauge, so no contradiction with rigidity
        let report = deformation_map(&family, 0.0, 1e-4, GAMMA).unwrap();
        let expected = (1.5f64 * 0.8).powf(2.0 / 3.0);
        assert!((report.map.eval(0.0) - expected).abs() < 1e-6);

        let sample = sample_family(&family, 0.0, 10, 1e-4, GAMMA).unwrap();
        for (q, fd) in &sample.derivatives {
            assert!(fd.abs() < 1e-8, "q = {q} frozen action moved by {fd:e}");
        }
    }

    #[test]
    fn affine_paths_on_a_perturbed_domain_keep_the_transform_null() {
        let family = affine_family(
            DomainSpec::ellipse(1.3, 0.9).with_harmonic(4, 0.01).with_grid(256),
            [[1.0, 0.0], [0.0, -1.0]],
        );
        let sample = sample_family(&family, 0.1, 8, 1e-4, GAMMA).unwrap();
        for (q, x) in &sample.xray {
            assert!(x.abs() < 1e-8, "q = {q} transform {x:e}");
        }
        for (q, fd) in &sample.derivatives {
            assert!(fd.abs() < 1e-8, "q = {q} derivative {fd:e}");
        }
    }

    #[test]
    fn bump_family_matches_the_transform() {
        // Both sides of the identity are built from the same secant pair, so
        // the frozen-action difference expands bilinearly into exactly the
        // velocity field the transform integrates: the defect sits at solver
        // precision for every h, well inside the 1e-6 + C h^2 budget.
        let family = harmonic_family(circle_base(256), 4, 1.0);
        for q in [4usize, 8, 16] {
            for h in [1e-3, 1e-4] {
                let check = action_derivative_check(&family, 0.0, q, h, GAMMA).unwrap();
                assert!(
                    check.difference.abs() < 1e-9,
                    "q = {q}, h = {h:e}: defect {:e}",
                    check.difference
                );
            }
        }

        // the quadratic convergence is visible in the derivative estimate
        // itself; tau off 0 so the odd tau-derivatives of the action survive
        let fd = |h: f64| {
            action_derivative_check(&family, 0.05, 5, h, GAMMA)
                .unwrap()
                .finite_difference
        };
        let (c, m, f) = (fd(2e-2), fd(1e-2), fd(5e-3));
        let ratio = (c - m) / (m - f);
        assert!(
            (3.4..4.6).contains(&ratio),
            "halving should quarter the step error, got {ratio} ({c:e}, {m:e}, {f:e})"
        );
        let check = action_derivative_check(&family, 0.05, 5, 1e-4, GAMMA).unwrap();
        assert!(check.difference.abs() < 1e-9);

        // and in the map itself through the halving estimate
        let report = deformation_map(&family, 0.0, 1e-3, GAMMA).unwrap();
        let order = report.order.expect("quadratic signal is visible");
        assert!((1.5..2.5).contains(&order), "order {order}");
    }

    #[test]
    fn bump_six_is_not_isospectral() {
        let family = harmonic_family(circle_base(256), 6, 1.0);
        let res = isospectral_residuals(&family, 0.0, 8, 1e-4, GAMMA).unwrap();
        assert!(!res.consistent);
        let at = |q: usize| res.xray.iter().find(|r| r.0 == q).unwrap().1;
        assert!(at(6).abs() > 1e-3, "q = 6 sees the sixth harmonic, got {:e}", at(6));
        assert!(at(5).abs() < 1e-2 * at(6).abs(), "q = 5 is blind to it");
    }

    #[test]
    fn pinned_gauge_holds_the_axis_points() {
        let mut family = harmonic_family(circle_base(256), 4, 1.0);
        family.normalization = Normalization::FixedPoints;
        let base = AffineCurve::build(&family.base).unwrap();
        let o = base.point(0.0);
        let o_prime = base.point(base.perimeter() / 2.0);
        let curve = family.curve_at(0.02).unwrap();
        assert!(dist(curve.point(0.0), o) < 1e-8);
        assert!(dist(curve.point(curve.perimeter() / 2.0), o_prime) < 1e-8);

        // at tau = 0 the perimeter is stationary, so the step matches
        let report = deformation_map(&family, 0.0, 1e-4, GAMMA).unwrap();
        assert!(report.evenness < 1e-10);

        // away from 0 the perimeter drifts linearly and the gauge rejects
        assert!(matches!(
            deformation_map(&family, 0.05, 1e-4, GAMMA),
            Err(Error::Normalization(_))
        ));

        // a pinned squeeze is undone entirely
        let mut squeeze = affine_family(
            DomainSpec::ellipse(1.5, 0.8).with_grid(256),
            [[1.0, 0.0], [0.0, -1.0]],
        );
        squeeze.normalization = Normalization::FixedPoints;
        let report = deformation_map(&squeeze, 0.1, 1e-4, GAMMA).unwrap();
        let sup: f64 = (0..257)
            .map(|i| report.map.eval(i as f64 / 257.0).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-9, "pinned squeeze must be constant, sup {sup:e}");
        match rank_one_check(&squeeze, &[0.1, 0.3], 1e-4).unwrap() {
            RankOneVerdict::Rigid { distance } => assert!(distance < 1e-9),
            RankOneVerdict::NotApplicable { .. } => panic!("map should vanish"),
        }

        // a rotation leaves the axis, which the pinned gauge cannot absorb
        let mut rotation = affine_family(circle_base(256), [[0.0, -1.0], [1.0, 0.0]]);
        rotation.normalization = Normalization::FixedPoints;
        assert!(matches!(
            rotation.curve_at(0.3),
            Err(Error::Normalization(_))
        ));
    }

    #[test]
    fn interval_bounds_are_enforced() {
        let mut family = harmonic_family(circle_base(256), 4, 1.0);
        family.interval = Some([-0.1, 0.1]);
        family.curve_at(0.05).unwrap();
        assert!(matches!(family.curve_at(0.2), Err(Error::InvalidSpec(_))));
        // the side step can leave the interval even when tau is inside
        assert!(matches!(
            deformation_map(&family, 0.1, 1e-3, GAMMA),
            Err(Error::InvalidSpec(_))
        ));
    }
}
