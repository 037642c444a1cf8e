//! Convex boundary curves in affine arclength parametrization.
//!
//! A domain is described generatively: a reference ellipse plus cosine
//! harmonics added to the Euclidean radius of curvature in tangent angle,
//! rho(phi) = rho_ellipse(phi) + sum_j delta_j cos(j phi). That makes strict
//! convexity a pointwise sign condition, closure automatic (no j = 1 term),
//! and axial symmetry about the x axis structural.
//!
//! The build recovers the support function h from rho by coefficient division
//! (h_m = rho_m / (1 - m^2)), so positions come from series evaluation rather
//! than numerical integration. The curve is then reparametrized by affine
//! arclength t, with dt/dphi = rho^{2/3}, and all tables are stored as
//! trigonometric series in t over one period [0, L).
//!
//! In this parametrization det(gamma', gamma'') = 1, the tangent has Euclidean
//! norm rho^{1/3}, and gamma''' = -k gamma' defines the affine curvature k.
//! Those three identities are checked on the full grid at build time and kept
//! as diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::SpectralSeries;
use crate::scalar::{wrap, Real};

pub const DEFAULT_GRID: usize = 4096;

fn default_grid_size() -> usize {
    DEFAULT_GRID
}

/// One cosine harmonic added to the radius of curvature.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Harmonic {
    pub j: u32,
    pub delta: f64,
}

/// Generative description of a strictly convex, axially symmetric domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSpec {
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub perturbation: Vec<Harmonic>,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
}

impl DomainSpec {
    pub fn ellipse(a: f64, b: f64) -> Self {
        DomainSpec { a, b, perturbation: Vec::new(), grid_size: DEFAULT_GRID }
    }

    pub fn circle() -> Self {
        Self::ellipse(1.0, 1.0)
    }

    pub fn with_harmonic(mut self, j: u32, delta: f64) -> Self {
        self.perturbation.push(Harmonic { j, delta });
        self
    }

    pub fn with_grid(mut self, grid_size: usize) -> Self {
        self.grid_size = grid_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) || !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "semi-axes must be positive, got a = {}, b = {}",
                self.a, self.b
            )));
        }
        for h in &self.perturbation {
            if h.j < 2 {
                return Err(Error::InvalidSpec(format!(
                    "harmonic j = {} not allowed: j = 0 rescales, j = 1 breaks closure",
                    h.j
                )));
            }
            if !h.delta.is_finite() {
                return Err(Error::InvalidSpec(format!("harmonic j = {} has non-finite amplitude", h.j)));
            }
        }
        if self.grid_size < 16 {
            return Err(Error::InvalidSpec(format!(
                "grid_size {} too small (need at least 16)",
                self.grid_size
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: DomainSpec =
            serde_json::from_str(text).map_err(|e| Error::InvalidSpec(format!("bad JSON: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Radius of curvature at tangent angle phi.
    fn rho_of_phi<S: Real>(&self, phi: S) -> S {
        let a = S::from_f64(self.a);
        let b = S::from_f64(self.b);
        let (s, c) = phi.sin_cos();
        let h2 = a * a * c * c + b * b * s * s;
        let h = h2.sqrt();
        let mut r = a * a * b * b / (h2 * h);
        for p in &self.perturbation {
            r += S::from_f64(p.delta) * (phi * S::from_usize(p.j as usize)).cos();
        }
        r
    }
}

/// Residuals of the frame identities over the build grid, in f64 regardless of
/// the working scalar.
#[derive(Debug, Clone, Copy, Default)]
pub struct CurveDiagnostics {
    /// max |det(gamma', gamma'') - 1|
    pub frame_det: f64,
    /// max ||gamma''' + k gamma'||
    pub third_deriv: f64,
    /// max || ||gamma'|| - rho^{1/3} ||
    pub tangent_norm: f64,
    /// max distance between gamma(L - t) and the axis reflection of gamma(t),
    /// measured before any parity cleanup
    pub symmetry: f64,
    /// max |k(formula) - det(gamma'', gamma''')|
    pub curvature_mismatch: f64,
    pub k_mean: f64,
    /// max_t |k(t) - k_mean|
    pub k_variation: f64,
    /// max_t |k(t) - (2 pi / L)^2|, distance to the equal-perimeter ellipse
    pub delta_hat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConicClass {
    Ellipse { k: f64 },
    NonConic,
}

/// The equal-affine-perimeter comparison ellipse of a curve.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceEllipse<S> {
    pub k: S,
    pub perimeter: S,
    /// Closeness proxy max_t |k(t) - k_E|.
    pub delta_hat: f64,
}

/// A closed strictly convex curve tabulated in affine arclength.
#[derive(Debug, Clone)]
pub struct AffineCurve<S> {
    grid: usize,
    perimeter: S,
    x: SpectralSeries<S>,
    y: SpectralSeries<S>,
    dx: SpectralSeries<S>,
    dy: SpectralSeries<S>,
    d2x: SpectralSeries<S>,
    d2y: SpectralSeries<S>,
    d3x: SpectralSeries<S>,
    d3y: SpectralSeries<S>,
    rho: SpectralSeries<S>,
    k: SpectralSeries<S>,
    dk: SpectralSeries<S>,
    diag: CurveDiagnostics,
}

/// Newton inversion of t(phi) = slope*phi + osc(phi) on the uniform t grid,
/// returning position and radius-of-curvature samples. osc is odd, so
/// t(0) = 0 and t(pi) = L/2 hold exactly.
#[allow(clippy::too_many_arguments)]
fn invert_and_sample<P: Real>(
    m: usize,
    slope: P,
    perimeter: P,
    osc: &SpectralSeries<P>,
    speed: &SpectralSeries<P>,
    h: &SpectralSeries<P>,
    hp: &SpectralSeries<P>,
    rho: &SpectralSeries<P>,
) -> Result<(Vec<P>, Vec<P>, Vec<P>)> {
    let newton_tol = 8.0 * P::EPS * perimeter.to_f64();
    let mut xs = Vec::with_capacity(m);
    let mut ys = Vec::with_capacity(m);
    let mut rhos = Vec::with_capacity(m);
    let mut phi = P::zero();
    for i in 0..m {
        if i > 0 {
            let ti = perimeter * P::from_usize(i) / P::from_usize(m);
            phi += perimeter / (P::from_usize(m) * speed.eval(phi));
            // the update is applied once more after the residual passes, so
            // the accepted root sits at the evaluation-noise floor
            let mut ok = false;
            for _ in 0..60 {
                let f = slope * phi + osc.eval(phi) - ti;
                phi -= f / speed.eval(phi);
                if f.to_f64().abs() <= newton_tol {
                    ok = true;
                    break;
                }
            }
            if !ok {
                let f = (slope * phi + osc.eval(phi) - ti).to_f64();
                if f.abs() > 1e3 * newton_tol {
                    return Err(Error::RootFind(format!(
                        "reparametrization stalled at t = {:.6} (residual {:.3e})",
                        ti.to_f64(),
                        f
                    )));
                }
            }
        }
        let (sp, cp) = phi.sin_cos();
        let hv = h.eval(phi);
        let hd = hp.eval(phi);
        xs.push(hv * cp - hd * sp);
        ys.push(hv * sp + hd * cp);
        rhos.push(rho.eval(phi));
    }
    Ok((xs, ys, rhos))
}

impl<S: Real> AffineCurve<S> {
    pub fn build(spec: &DomainSpec) -> Result<Self> {
        spec.validate()?;
        let m = spec.grid_size;
        let two_pi = S::two_pi();

        // rho(phi) on the angular grid; strict convexity is checked pointwise
        let mut rho_phi_samples = Vec::with_capacity(m);
        for i in 0..m {
            let phi = two_pi * S::from_usize(i) / S::from_usize(m);
            let r = spec.rho_of_phi(phi);
            if !(r > S::zero()) {
                return Err(Error::NonConvex { phi: phi.to_f64(), rho: r.to_f64() });
            }
            rho_phi_samples.push(r);
        }
        let rho_phi = SpectralSeries::from_samples(&rho_phi_samples, two_pi);
        rho_phi.check_resolved()?;
        if rho_phi.cos_coeff(1).to_f64().abs() > 1e-10 * spec.a.max(spec.b) {
            return Err(Error::InternalConsistency(format!(
                "rho(phi) acquired a j = 1 harmonic ({:e})",
                rho_phi.cos_coeff(1).to_f64()
            )));
        }

        // support function h from rho = h + h'' by coefficient division
        let top = rho_phi.modes();
        let mut hcos = vec![S::zero(); top + 1];
        hcos[0] = rho_phi.cos_coeff(0);
        for mm in 2..=top {
            let denom = S::one() - S::from_usize(mm) * S::from_usize(mm);
            hcos[mm] = rho_phi.cos_coeff(mm) / denom;
        }
        let h = SpectralSeries::from_parts(two_pi, hcos, vec![S::zero()]);
        let hp = h.derivative();

        // affine arclength: dt/dphi = rho^{2/3}
        let speed_samples: Vec<S> = rho_phi_samples
            .iter()
            .map(|&r| {
                let c = r.cbrt();
                c * c
            })
            .collect();
        let speed = SpectralSeries::from_samples(&speed_samples, two_pi);
        let (slope, osc) = speed.antiderivative();
        let perimeter = two_pi * slope;

        // invert t(phi) on the uniform t grid and sample the curve there, all
        // in the promoted scalar: root jitter or evaluation noise at S's own
        // roundoff, amplified by the steepness of rho, would otherwise smear
        // a noise plateau across the spectrum that high derivatives magnify
        let (pxs, pys, prhos) = invert_and_sample(
            m,
            slope.promote(),
            perimeter.promote(),
            &osc.promoted(),
            &speed.promoted(),
            &h.promoted(),
            &hp.promoted(),
            &rho_phi.promoted(),
        )?;
        let xs: Vec<S> = pxs.into_iter().map(S::demote).collect();
        let ys: Vec<S> = pys.into_iter().map(S::demote).collect();
        let rhos: Vec<S> = prhos.into_iter().map(S::demote).collect();

        // raw-sample symmetry: gamma(L - t_i) vs the reflection of gamma(t_i)
        let mut symmetry = 0.0f64;
        for i in 1..m {
            let j = m - i;
            let ex = (xs[j] - xs[i]).to_f64();
            let ey = (ys[j] + ys[i]).to_f64();
            symmetry = symmetry.max(ex.hypot(ey));
        }

        let x = SpectralSeries::from_samples(&xs, perimeter);
        let y = SpectralSeries::from_samples(&ys, perimeter);
        // record asymmetry, then snap to exact parity: x even, y odd
        let parity_leak = x.odd_part_max().max(y.even_part_max());
        let symmetry = symmetry.max(2.0 * parity_leak);
        if symmetry > 1e-8 {
            return Err(Error::NotAxiallySymmetric(symmetry));
        }
        let x = x.even_projected();
        let y = y.odd_projected();
        let rho_t = SpectralSeries::from_samples(&rhos, perimeter).even_projected();

        Self::assemble(spec.grid_size, perimeter, x, y, rho_t, symmetry)
    }

    /// Common tail of `build` and `apply_affine`: derivative series, affine
    /// curvature both ways, and the identity residuals on the grid.
    fn assemble(
        grid: usize,
        perimeter: S,
        x: SpectralSeries<S>,
        y: SpectralSeries<S>,
        rho: SpectralSeries<S>,
        symmetry: f64,
    ) -> Result<Self> {
        let m = grid;
        x.check_resolved()?;
        y.check_resolved()?;
        rho.check_resolved()?;
        let dx = x.derivative();
        let dy = y.derivative();
        let d2x = dx.derivative();
        let d2y = dy.derivative();
        let d3x = d2x.derivative();
        let d3y = d2y.derivative();
        let drho = rho.derivative();
        let d2rho = drho.derivative();

        let third = S::one() / S::from_f64(3.0);
        let two_ninths = S::from_f64(2.0 / 9.0);
        let mut ks = Vec::with_capacity(m);
        let mut frame_det = 0.0f64;
        let mut tangent_norm = 0.0f64;
        let mut curvature_mismatch = 0.0f64;
        for i in 0..m {
            let t = perimeter * S::from_usize(i) / S::from_usize(m);
            let r = rho.eval(t);
            if !(r > S::zero()) {
                return Err(Error::NonConvex { phi: f64::NAN, rho: r.to_f64() });
            }
            let rp = drho.eval(t);
            let rpp = d2rho.eval(t);
            // k = rho^{-4/3} - rho'' / (3 rho) + 2 rho'^2 / (9 rho^2)
            let k_formula = S::one() / (r * r.cbrt()) - third * rpp / r + two_ninths * rp * rp / (r * r);
            ks.push(k_formula);

            let (dxv, dyv) = (dx.eval(t), dy.eval(t));
            let (d2xv, d2yv) = (d2x.eval(t), d2y.eval(t));
            let (d3xv, d3yv) = (d3x.eval(t), d3y.eval(t));
            let det = dxv * d2yv - dyv * d2xv;
            frame_det = frame_det.max((det - S::one()).to_f64().abs());
            let speed = (dxv * dxv + dyv * dyv).sqrt();
            tangent_norm = tangent_norm.max((speed - r.cbrt()).to_f64().abs());
            let k_det = d2xv * d3yv - d2yv * d3xv;
            curvature_mismatch = curvature_mismatch.max((k_formula - k_det).to_f64().abs());
        }
        if frame_det > 1e-8 {
            return Err(Error::FrameIdentity(frame_det));
        }

        let k = SpectralSeries::from_samples(&ks, perimeter);
        let dk = k.derivative();

        let mut third_deriv = 0.0f64;
        for i in 0..m {
            let t = perimeter * S::from_usize(i) / S::from_usize(m);
            let kv = ks[i];
            let ex = (d3x.eval(t) + kv * dx.eval(t)).to_f64();
            let ey = (d3y.eval(t) + kv * dy.eval(t)).to_f64();
            third_deriv = third_deriv.max(ex.hypot(ey));
        }
        if third_deriv > 1e-6 {
            return Err(Error::InternalConsistency(format!(
                "third-derivative identity residual {third_deriv:.3e} exceeds 1e-6"
            )));
        }

        let k_mean = k.mean().to_f64();
        let k_e = {
            let w = S::two_pi() / perimeter;
            w * w
        };
        let mut k_variation = 0.0f64;
        let mut delta_hat = 0.0f64;
        for i in 0..m {
            let t = perimeter * S::from_usize(i) / S::from_usize(m);
            let kv = k.eval(t);
            k_variation = k_variation.max((kv.to_f64() - k_mean).abs());
            delta_hat = delta_hat.max((kv - k_e).to_f64().abs());
        }

        let diag = CurveDiagnostics {
            frame_det,
            third_deriv,
            tangent_norm,
            symmetry,
            curvature_mismatch,
            k_mean,
            k_variation,
            delta_hat,
        };
        Ok(AffineCurve {
            grid,
            perimeter,
            x,
            y,
            dx,
            dy,
            d2x,
            d2y,
            d3x,
            d3y,
            rho,
            k,
            dk,
            diag,
        })
    }

    pub fn perimeter(&self) -> S {
        self.perimeter
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn diagnostics(&self) -> &CurveDiagnostics {
        &self.diag
    }

    pub fn point(&self, t: S) -> [S; 2] {
        [self.x.eval(t), self.y.eval(t)]
    }

    pub fn tangent(&self, t: S) -> [S; 2] {
        [self.dx.eval(t), self.dy.eval(t)]
    }

    pub fn second(&self, t: S) -> [S; 2] {
        [self.d2x.eval(t), self.d2y.eval(t)]
    }

    pub fn third(&self, t: S) -> [S; 2] {
        [self.d3x.eval(t), self.d3y.eval(t)]
    }

    pub fn rho_at(&self, t: S) -> S {
        self.rho.eval(t)
    }

    pub fn curvature_at(&self, t: S) -> S {
        self.k.eval(t)
    }

    pub fn curvature_deriv_at(&self, t: S) -> S {
        self.dk.eval(t)
    }

    /// Affine curvature with the cross-check: the rho-formula value is
    /// returned after verifying det(gamma'', gamma''') agrees with it.
    pub fn curvature_checked(&self, t: S) -> Result<S> {
        let t = wrap(t, self.perimeter);
        let k_formula = self.k.eval(t);
        let k_det = self.d2x.eval(t) * self.d3y.eval(t) - self.d2y.eval(t) * self.d3x.eval(t);
        let tol = 1e-6 * (1.0 + k_formula.to_f64().abs());
        if (k_formula - k_det).to_f64().abs() > tol {
            return Err(Error::CurvatureMismatch {
                formula: k_formula.to_f64(),
                determinant: k_det.to_f64(),
            });
        }
        Ok(k_formula)
    }

    pub fn curvature_series(&self) -> &SpectralSeries<S> {
        &self.k
    }

    pub fn curvature_deriv_series(&self) -> &SpectralSeries<S> {
        &self.dk
    }

    pub fn rho_series(&self) -> &SpectralSeries<S> {
        &self.rho
    }

    /// Euclidean area enclosed by the curve, (1/2) oint det(gamma, gamma') dt
    /// by the uniform-grid mean (spectrally accurate on a periodic integrand).
    pub fn enclosed_area(&self) -> S {
        let m = self.grid;
        let mut acc = S::zero();
        for i in 0..m {
            let t = self.perimeter * S::from_usize(i) / S::from_usize(m);
            let p = self.point(t);
            let d = self.tangent(t);
            acc = acc + (p[0] * d[1] - p[1] * d[0]);
        }
        S::from_f64(0.5) * self.perimeter * acc / S::from_usize(m)
    }

    pub fn detect_conic(&self) -> ConicClass {
        let scale = self.diag.k_mean.abs().max(1e-300);
        if self.diag.k_variation <= 1e-7 * scale && self.diag.k_mean > 0.0 {
            ConicClass::Ellipse { k: self.diag.k_mean }
        } else {
            ConicClass::NonConic
        }
    }

    /// The ellipse sharing this curve's affine perimeter: L_E = L forces
    /// k_E = (2 pi / L)^2, which kills the perimeter-difference term in the
    /// area asymptotics.
    pub fn reference_ellipse(&self) -> ReferenceEllipse<S> {
        let w = S::two_pi() / self.perimeter;
        ReferenceEllipse { k: w * w, perimeter: self.perimeter, delta_hat: self.diag.delta_hat }
    }

    /// Image under x -> M x + c with det M = 1. The parameter stays affine
    /// arclength and L is untouched; axial symmetry generally is not, so the
    /// result carries a fresh symmetry residual instead of an error.
    pub fn apply_affine(&self, linear: [[f64; 2]; 2], translation: [f64; 2]) -> Result<Self> {
        let det = linear[0][0] * linear[1][1] - linear[0][1] * linear[1][0];
        if (det - 1.0).abs() > 1e-12 {
            return Err(Error::NotAreaPreserving(det));
        }
        let c = |v: f64| S::from_f64(v);
        let x = SpectralSeries::combine(&self.x, c(linear[0][0]), &self.y, c(linear[0][1]), c(translation[0]));
        let y = SpectralSeries::combine(&self.x, c(linear[1][0]), &self.y, c(linear[1][1]), c(translation[1]));
        let dx = x.derivative();
        let dy = y.derivative();
        let m = self.grid;
        // Euclidean rho is not affine invariant; with det(gamma',gamma'') = 1
        // it equals ||gamma'||^3
        let mut rhos = Vec::with_capacity(m);
        let mut symmetry = 0.0f64;
        let mut pts = Vec::with_capacity(m);
        for i in 0..m {
            let t = self.perimeter * S::from_usize(i) / S::from_usize(m);
            let (dxv, dyv) = (dx.eval(t), dy.eval(t));
            let v2 = dxv * dxv + dyv * dyv;
            rhos.push(v2 * v2.sqrt());
            pts.push([x.eval(t), y.eval(t)]);
        }
        for i in 1..m {
            let j = m - i;
            let ex = (pts[j][0] - pts[i][0]).to_f64();
            let ey = (pts[j][1] + pts[i][1]).to_f64();
            symmetry = symmetry.max(ex.hypot(ey));
        }
        let rho = SpectralSeries::from_samples(&rhos, self.perimeter);
        Self::assemble(self.grid, self.perimeter, x, y, rho, symmetry)
    }
}
