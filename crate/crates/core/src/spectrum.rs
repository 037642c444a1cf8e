//! Area spectrum of the maximal orbits, the expansion fit in 1/q^2, the
//! discrete X-ray transform, and the chord-weight expansion around the
//! equal-perimeter reference ellipse.
//!
//! Conventions. Profiles of the orbit expansion (a0, a1) and the weight
//! corrections (c1, c2) are unit-periodic functions of the fraction x = t/L,
//! and derivatives are taken in x. Maps n are evaluated at theta = t/L, which
//! puts a 1/L on every a*n' pairing. The reference ellipse shares the affine
//! perimeter of the domain, so the c0 = 2(L - L_E) correction vanishes
//! identically and the remaining corrections start at 1/q^3.

use crate::curve::{AffineCurve, ConicClass};
use crate::error::{Error, Result};
use crate::fourier::SpectralSeries;
use crate::hspace::EvenFourierMap;
use crate::orbit::{max_area_orbit, SymmetricOrbit};
use rayon::prelude::*;

/// One q-row of the area spectrum.
#[derive(Clone, Debug)]
pub struct SpectrumRow {
    pub q: usize,
    pub action: f64,
    /// Variational residual of the solved orbit (0 for the closed q = 2 row).
    pub residual: f64,
}

/// Actions of the maximal symmetric orbits for q = 2..=q_max.
#[derive(Clone, Debug)]
pub struct SpectrumTable {
    domain: String,
    perimeter: f64,
    curvature_integral: f64,
    rows: Vec<SpectrumRow>,
}

impl SpectrumTable {
    pub fn rows(&self) -> &[SpectrumRow] {
        &self.rows
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    /// Integral of the affine curvature over one period.
    pub fn curvature_integral(&self) -> f64 {
        self.curvature_integral
    }

    pub fn q_max(&self) -> usize {
        self.rows.last().map_or(0, |r| r.q)
    }

    pub fn action(&self, q: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.q == q).map(|r| r.action)
    }
}

/// Solves the maximal orbit for every q in [2, q_max] and collects the
/// actions. Solves run in parallel; the rows come back in q order and any
/// failure is reported for the smallest failing q.
pub fn spectrum_table(curve: &AffineCurve<f64>, q_max: usize) -> Result<SpectrumTable> {
    if q_max < 3 {
        return Err(Error::InvalidRange {
            q_min: 2,
            q_max,
            reason: "spectrum needs q_max >= 3".into(),
        });
    }
    let solved: Vec<Result<SpectrumRow>> = (2..=q_max)
        .into_par_iter()
        .map(|q| {
            let orbit = max_area_orbit(curve, q)?;
            Ok(SpectrumRow {
                q,
                action: orbit.action(),
                residual: orbit.residual(),
            })
        })
        .collect();
    let rows = solved.into_iter().collect::<Result<Vec<_>>>()?;
    for pair in rows.windows(2) {
        // the maximal q-gon area grows strictly in q; a violation means a
        // solve landed on the wrong critical point
        if !(pair[1].action > pair[0].action) {
            return Err(Error::InternalConsistency(format!(
                "actions not increasing: A_{} = {:.6e} vs A_{} = {:.6e}",
                pair[0].q, pair[0].action, pair[1].q, pair[1].action
            )));
        }
    }
    let domain = match curve.detect_conic() {
        ConicClass::Ellipse { k } => format!("ellipse, affine curvature {k:.6e}"),
        ConicClass::NonConic => {
            format!("convex domain, affine perimeter {:.6e}", curve.perimeter())
        }
    };
    let k = curve.curvature_series();
    Ok(SpectrumTable {
        domain,
        perimeter: curve.perimeter(),
        curvature_integral: k.mean() * curve.perimeter(),
        rows,
    })
}

/// Coefficients of A_q ~ c0 + c1/q^2 + c2/q^4 together with the stated
/// curvature normalizations and the convention constant relating them.
#[derive(Clone, Debug)]
pub struct AsymptoticFit {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// c1 / (L^3/12): the constant mapping the fitted scale onto the stated
    /// coefficient normalization. The circle gives -2.
    pub kappa: f64,
    /// L^3/12.
    pub a1_reference: f64,
    /// -L^4/240 times the curvature integral.
    pub a2_reference: f64,
    /// sup |A_q - (c0 + c1/q^2 + c2/q^4)| over the fitted rows.
    pub residual: f64,
    pub q_min: usize,
    pub q_max: usize,
}

/// Weighted least squares for the expansion coefficients over q >= q_min.
///
/// Weights q^4 equalize the influence of the c2 term. A q^{-6} nuisance term
/// is carried internally so the genuine next order does not bias c2; it is
/// not reported.
pub fn fit_asymptotics(table: &SpectrumTable, q_min: usize) -> Result<AsymptoticFit> {
    let q_max = table.q_max();
    if q_min < 3 {
        return Err(Error::InvalidRange {
            q_min,
            q_max,
            reason: "expansion fit needs q_min >= 3".into(),
        });
    }
    if q_max < 4 * q_min {
        return Err(Error::InvalidRange {
            q_min,
            q_max,
            reason: "fit window too narrow: q_max must reach 4 q_min".into(),
        });
    }
    let rows: Vec<&SpectrumRow> = table.rows().iter().filter(|r| r.q >= q_min).collect();
    let m = rows.len();
    // weight q^4 on the squared error = scale each equation by q^2
    let mut a = nalgebra::DMatrix::<f64>::zeros(m, 4);
    let mut b = nalgebra::DVector::<f64>::zeros(m);
    for (i, row) in rows.iter().enumerate() {
        let q2 = (row.q * row.q) as f64;
        a[(i, 0)] = q2;
        a[(i, 1)] = 1.0;
        a[(i, 2)] = 1.0 / q2;
        a[(i, 3)] = 1.0 / (q2 * q2);
        b[i] = q2 * row.action;
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-13 * smax) {
        return Err(Error::FitIllConditioned(format!(
            "singular value ratio {:.3e} over [{q_min}, {q_max}]",
            smin / smax
        )));
    }
    let coef = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::FitIllConditioned(e.to_string()))?;
    let (c0, c1, c2) = (coef[0], coef[1], coef[2]);
    let residual = rows
        .iter()
        .map(|r| {
            let q2 = (r.q * r.q) as f64;
            (r.action - (c0 + c1 / q2 + c2 / (q2 * q2))).abs()
        })
        .fold(0.0f64, f64::max);
    let l = table.perimeter();
    let a1_reference = l.powi(3) / 12.0;
    let a2_reference = -l.powi(4) / 240.0 * table.curvature_integral();
    Ok(AsymptoticFit {
        c0,
        c1,
        c2,
        kappa: c1 / a1_reference,
        a1_reference,
        a2_reference,
        residual,
        q_min,
        q_max,
    })
}

pub(crate) fn chord_weights(curve: &AffineCurve<f64>, orbit: &SymmetricOrbit<f64>) -> Vec<f64> {
    let q = orbit.q();
    let t = orbit.params();
    (0..q)
        .map(|j| {
            let prev = curve.point(t[(j + q - 1) % q]);
            let next = curve.point(t[(j + 1) % q]);
            let chord = ((next[0] - prev[0]).powi(2) + (next[1] - prev[1]).powi(2)).sqrt();
            chord / curve.rho_at(t[j]).cbrt()
        })
        .collect()
}

/// Discrete X-ray transform of n along the orbit: sum of n(t_k/L) times the
/// curvature-weighted neighbor chord rho^{-1/3}(t_k) |gamma(t_{k+1}) -
/// gamma(t_{k-1})|. The q = 2 diameter orbit gives 0 for every n.
pub fn xray_transform(
    curve: &AffineCurve<f64>,
    orbit: &SymmetricOrbit<f64>,
    n: &EvenFourierMap,
) -> f64 {
    let l = curve.perimeter();
    let weights = chord_weights(curve, orbit);
    orbit
        .params()
        .iter()
        .zip(&weights)
        .map(|(&tk, &wk)| n.eval(tk / l) * wk)
        .sum()
}

/// Per-vertex chord weights of the maximal q-orbit next to their expansion
/// around the reference ellipse.
#[derive(Clone, Debug)]
pub struct ChordWeightProfile {
    pub q: usize,
    pub weights: Vec<f64>,
    /// 2 k_E^{-1/2} sin(2pi/q) + c0/q + c1(j/q)/q^3.
    pub predicted: Vec<f64>,
    /// sup |weight - predicted|; decays like 1/q^5, since the would-be
    /// fourth-order profile vanishes (see `weight_correction`).
    pub residual: f64,
}

/// The third-order correction profile of the chord-weight expansion, as a
/// function of the fraction x = t/L.
///
/// c1 combines the two third-order sources: the curvature mismatch against
/// the reference ellipse from the bare chord, and twice the x-derivative of
/// the vertex-shift profile a0. The printed form of this coefficient
/// elsewhere mixes normalizations (a bare k_E L_E^3 against k, and an extra
/// factor L on the a0' part); the form below is the one consistent with the
/// vertex-law profiles, and the order check in the tests confirms it.
///
/// The would-be fourth-order profile is twice the x-derivative of the
/// third-order vertex shift, and that shift vanishes identically (see the
/// orbit asymptotics), so the expansion's next term sits at 1/q^5.
fn weight_correction(curve: &AffineCurve<f64>, x: f64) -> f64 {
    let l = curve.perimeter();
    let re = curve.reference_ellipse();
    let k = curve.curvature_at(l * x);
    let k_mean = curve.curvature_series().mean();
    (re.k * re.perimeter.powi(3) - k * l.powi(3)) / 3.0 + l.powi(3) / 15.0 * (k - k_mean)
}

pub fn chord_weight_profile(curve: &AffineCurve<f64>, q: usize) -> Result<ChordWeightProfile> {
    let orbit = max_area_orbit(curve, q)?;
    let weights = chord_weights(curve, &orbit);
    let l = curve.perimeter();
    let re = curve.reference_ellipse();
    let qf = q as f64;
    let main = 2.0 / re.k.sqrt() * (2.0 * std::f64::consts::PI / qf).sin();
    let c0 = 2.0 * (l - re.perimeter);
    let mut predicted = vec![0.0; q];
    let mut residual = 0.0f64;
    for j in 0..q {
        let c1 = weight_correction(curve, j as f64 / qf);
        predicted[j] = main + c0 / qf + c1 / qf.powi(3);
        residual = residual.max((weights[j] - predicted[j]).abs());
    }
    Ok(ChordWeightProfile {
        q,
        weights,
        predicted,
        residual,
    })
}

/// The constant and the two 1/q^2, 1/q^3 functionals of the X-ray expansion
/// around the reference ellipse.
#[derive(Clone, Copy, Debug)]
pub struct CorrectionFunctionals {
    /// 2(L - L_E): identically zero under the equal-perimeter reference.
    pub lambda: f64,
    pub alpha1: f64,
    /// Identically zero: its two ingredient profiles both vanish.
    pub alpha2: f64,
}

/// Quadrature of the mean-value expression for the second-order functional,
/// alpha1 = (c1 n + (4 pi k_E^{-1/2} + c0)(a0/L) n')_0, as a uniform-grid
/// average on the curve grid. The third-order functional is built from the
/// fourth-order weight profile and the third-order vertex shift, and both of
/// those vanish identically, so alpha2 = 0 for every map.
pub fn correction_functionals(
    curve: &AffineCurve<f64>,
    n: &EvenFourierMap,
) -> CorrectionFunctionals {
    let l = curve.perimeter();
    let re = curve.reference_ellipse();
    let c0 = 2.0 * (l - re.perimeter);
    let p = 4.0 * std::f64::consts::PI / re.k.sqrt() + c0;
    let k = curve.curvature_series();
    let k_mean = k.mean();
    let (_, k_int) = SpectralSeries::combine(k, 1.0, k, 0.0, -k_mean).antiderivative();
    let k_int0 = k_int.eval(0.0);
    let m = curve.grid();
    let mut sum1 = 0.0f64;
    for i in 0..m {
        let x = i as f64 / m as f64;
        let c1 = weight_correction(curve, x);
        let a0 = l * l / 30.0 * (k_int.eval(l * x) - k_int0);
        sum1 += c1 * n.eval(x) + p * a0 / l * n.eval_deriv(x, 1);
    }
    CorrectionFunctionals {
        lambda: c0,
        alpha1: sum1 / m as f64,
        alpha2: 0.0,
    }
}
