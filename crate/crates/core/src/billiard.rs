//! The symplectic billiard map: a chord (t0, t1) advances to (t1, t2) where
//! the chord from gamma(t0) to gamma(t2) is parallel to the tangent at
//! gamma(t1). Includes the generating function, the parallel-tangent
//! antipode, orbit traces, and the small-gap expansion check.

use crate::curve::AffineCurve;
use crate::error::{Error, Result};
use crate::scalar::{wrap, Real};

/// Oriented chord of the phase cylinder. Parameters are plain reals with
/// t0 <= t1; evaluation wraps mod L internally, so a long orbit can keep
/// monotonically increasing parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseChord<S> {
    pub t0: S,
    pub t1: S,
}

impl<S: Real> PhaseChord<S> {
    pub fn new(t0: S, t1: S) -> Self {
        PhaseChord { t0, t1 }
    }

    pub fn gap(&self) -> S {
        self.t1 - self.t0
    }
}

fn det2<S: Real>(a: [S; 2], b: [S; 2]) -> S {
    a[0] * b[1] - a[1] * b[0]
}

/// det(gamma'(t0), gamma'(t1)): positive exactly on the open phase cylinder,
/// zero when t1 hits t0 or its parallel-tangent antipode.
pub fn phase_form<S: Real>(curve: &AffineCurve<S>, t0: S, t1: S) -> S {
    let l = curve.perimeter();
    det2(curve.tangent(wrap(t0, l)), curve.tangent(wrap(t1, l)))
}

/// Parameter step tolerance for the root finders, scaled so extended
/// precision scalars tighten it accordingly.
fn step_tol<S: Real>(perimeter: S) -> f64 {
    64.0 * S::EPS * perimeter.to_f64()
}

/// The other parameter where the tangent line is parallel: the unique
/// t* in (t, t + L) with det(gamma'(t), gamma'(t*)) = 0.
pub fn tangent_antipode<S: Real>(curve: &AffineCurve<S>, t: S) -> Result<S> {
    let l = curve.perimeter();
    let d0 = curve.tangent(wrap(t, l));
    let g = |tau: S| det2(d0, curve.tangent(wrap(tau, l)));
    // The tangent direction advances monotonically by 2 pi over one period,
    // so g has a single sign change on (t, t + L). Scan for the bracket.
    let scan = 32usize;
    let mut lo = t;
    let mut hi = t;
    let mut found = false;
    for j in 1..=scan {
        let tau = t + l * S::from_f64(j as f64 / scan as f64);
        if g(tau) < S::zero() {
            hi = tau;
            lo = t + l * S::from_f64((j - 1) as f64 / scan as f64);
            found = true;
            break;
        }
    }
    if !found {
        return Err(Error::RootFind(format!(
            "no sign change of the parallel-tangent function over a full period from t = {:.6}",
            t.to_f64()
        )));
    }
    refine_root(lo, hi, step_tol::<S>(l), &g, &|tau: S| {
        det2(d0, curve.second(wrap(tau, l)))
    })
}

/// Safeguarded Newton on a bracket [lo, hi] with f(lo) > 0 > f(hi).
/// Falls back to bisection whenever the Newton update leaves the bracket.
fn refine_root<S: Real>(
    mut lo: S,
    mut hi: S,
    tol: f64,
    f: &dyn Fn(S) -> S,
    fp: &dyn Fn(S) -> S,
) -> Result<S> {
    let half = S::from_f64(0.5);
    let mut tau = half * (lo + hi);
    for _ in 0..200 {
        let v = f(tau);
        if v > S::zero() {
            lo = tau;
        } else {
            hi = tau;
        }
        let d = fp(tau);
        let mut next = if d.to_f64() != 0.0 { tau - v / d } else { tau };
        if !(next > lo && next < hi) {
            next = half * (lo + hi);
        }
        let moved = (next - tau).to_f64().abs();
        tau = next;
        if moved <= tol || (hi - lo).to_f64() <= tol {
            return Ok(tau);
        }
    }
    Err(Error::RootFind(format!(
        "bracket [{:.9}, {:.9}] failed to collapse below {:.3e}",
        lo.to_f64(),
        hi.to_f64(),
        tol
    )))
}

/// One application of the billiard map. The diagonal is a fixed point by the
/// continuity extension; a chord at the antipodal edge of the cylinder wraps
/// to (t1, t0 + L) in the same spirit. Anything outside is rejected.
pub fn step<S: Real>(curve: &AffineCurve<S>, chord: PhaseChord<S>) -> Result<PhaseChord<S>> {
    let l = curve.perimeter();
    let tol = step_tol::<S>(l);
    let eps = chord.gap();
    if eps.to_f64() < 0.0 || eps.to_f64() > l.to_f64() {
        return Err(Error::OutsidePhaseSpace {
            t0: chord.t0.to_f64(),
            t1: chord.t1.to_f64(),
        });
    }
    if eps.to_f64() <= 4.0 * S::EPS * l.to_f64() {
        return Ok(PhaseChord::new(chord.t1, chord.t1));
    }
    let w = phase_form(curve, chord.t0, chord.t1);
    if w.to_f64() <= 0.0 {
        let star = tangent_antipode(curve, chord.t0)?;
        if ((chord.t1 - chord.t0) - (star - chord.t0)).to_f64().abs() <= 1e3 * tol {
            return Ok(PhaseChord::new(chord.t1, chord.t0 + l));
        }
        return Err(Error::OutsidePhaseSpace {
            t0: chord.t0.to_f64(),
            t1: chord.t1.to_f64(),
        });
    }

    let p0 = curve.point(wrap(chord.t0, l));
    let d1 = curve.tangent(wrap(chord.t1, l));
    let f = |tau: S| {
        let p = curve.point(wrap(tau, l));
        det2([p[0] - p0[0], p[1] - p0[1]], d1)
    };
    let fp = |tau: S| det2(curve.tangent(wrap(tau, l)), d1);

    // f > 0 just past t1 and f < 0 at the antipode of t1: single root by
    // strict convexity. The ellipse-exact guess t1 + eps starts Newton.
    let hi = tangent_antipode(curve, chord.t1)?;
    let hi = if hi.to_f64() <= chord.t1.to_f64() { hi + l } else { hi };
    let mut guess = chord.t1 + eps;
    let margin = S::from_f64(1e-6) * l;
    if !(guess > chord.t1 && guess < hi) {
        guess = S::from_f64(0.5) * (chord.t1 + hi);
    }
    let t2 = if f(guess).to_f64().abs() <= tol * d1[0].to_f64().hypot(d1[1].to_f64()) {
        guess
    } else {
        let lo = chord.t1 + S::from_f64(1e-9) * margin;
        refine_root(lo, hi, tol, &f, &fp)?
    };
    Ok(PhaseChord::new(chord.t1, t2))
}

/// Twice the signed area swept from the origin: det(gamma(t0), gamma(t1)).
pub fn generating_function<S: Real>(curve: &AffineCurve<S>, t0: S, t1: S) -> S {
    let l = curve.perimeter();
    det2(curve.point(wrap(t0, l)), curve.point(wrap(t1, l)))
}

/// Bounce residual of a triple: det(gamma(t2) - gamma(t0), gamma'(t1)).
/// Vanishes exactly when (t0, t1, t2) are consecutive orbit points.
pub fn check_variational<S: Real>(curve: &AffineCurve<S>, t0: S, t1: S, t2: S) -> S {
    let l = curve.perimeter();
    let p0 = curve.point(wrap(t0, l));
    let p2 = curve.point(wrap(t2, l));
    det2([p2[0] - p0[0], p2[1] - p0[1]], curve.tangent(wrap(t1, l)))
}

/// One exported orbit vertex: parameter (wrapped), position, and the gap to
/// the next vertex.
#[derive(Clone, Copy, Debug)]
pub struct TraceRow<S> {
    pub index: usize,
    pub t: S,
    pub x: S,
    pub y: S,
    pub gap: S,
}

/// Iterates the map `steps` times and reports the visited vertices.
pub fn trace<S: Real>(
    curve: &AffineCurve<S>,
    start: PhaseChord<S>,
    steps: usize,
) -> Result<Vec<TraceRow<S>>> {
    let l = curve.perimeter();
    let mut chord = start;
    let mut rows = Vec::with_capacity(steps + 1);
    for index in 0..=steps {
        let tw = wrap(chord.t0, l);
        let p = curve.point(tw);
        rows.push(TraceRow {
            index,
            t: tw,
            x: p[0],
            y: p[1],
            gap: chord.gap(),
        });
        chord = step(curve, chord)?;
    }
    Ok(rows)
}

/// Residual of the small-gap expansion: with (t, t + eps) stepping to a gap
/// eps1, returns eps1 - eps - (1/30) k' eps^4, which shrinks like eps^6 on
/// smooth domains. The curvature derivative is taken at the middle vertex
/// t + eps: centering the expansion there is what kills the quintic term,
/// while k' at t would leave a k'' eps^5 tail.
pub fn lazutkin_defect<S: Real>(curve: &AffineCurve<S>, t: S, eps: S) -> Result<S> {
    let next = step(curve, PhaseChord::new(t, t + eps))?;
    let eps1 = next.gap();
    let kp = curve.curvature_deriv_at(wrap(t + eps, curve.perimeter()));
    Ok(eps1 - eps - kp * eps.powi(4) / S::from_f64(30.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::DomainSpec;
    use crate::dd::DDouble;
    use std::f64::consts::PI;

    fn circle() -> AffineCurve<f64> {
        AffineCurve::build(&DomainSpec::circle().with_grid(256)).unwrap()
    }

    #[test]
    fn antipode_on_central_symmetry() {
        let c = circle();
        for t in [0.0, 1.3] {
            let star = tangent_antipode(&c, t).unwrap();
            assert!((star - t - PI).abs() < 1e-12, "t={t}: {star}");
        }
        let e = AffineCurve::<f64>::build(&DomainSpec::ellipse(2.0, 0.5).with_grid(512)).unwrap();
        for t in [0.0, 0.7, 2.9] {
            let star = tangent_antipode(&e, t).unwrap();
            assert!((star - t - PI).abs() < 1e-11, "t={t}: {star}");
        }
    }

    #[test]
    fn circle_step_advances_by_the_gap() {
        let c = circle();
        let next = step(&c, PhaseChord::new(0.0, PI / 4.0)).unwrap();
        assert!((next.t0 - PI / 4.0).abs() < 1e-14);
        assert!((next.t1 - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn ellipse_preserves_the_gap() {
        let e = AffineCurve::<f64>::build(&DomainSpec::ellipse(2.0, 0.5).with_grid(512)).unwrap();
        for (t, eps) in [(0.0, 0.3), (1.1, 1.9), (4.0, PI - 0.1), (2.2, 1e-3)] {
            let next = step(&e, PhaseChord::new(t, t + eps)).unwrap();
            assert!(
                (next.gap() - eps).abs() < 1e-9,
                "t={t} eps={eps}: gap {}",
                next.gap()
            );
            assert!(phase_form(&e, next.t0, next.t1) > 0.0);
        }
    }

    #[test]
    fn diagonal_and_antipodal_edges_extend_continuously() {
        let c = circle();
        let fixed = step(&c, PhaseChord::new(0.7, 0.7)).unwrap();
        assert_eq!(fixed.t0, 0.7);
        assert_eq!(fixed.t1, 0.7);
        let edge = step(&c, PhaseChord::new(0.2, 0.2 + PI)).unwrap();
        assert!((edge.t1 - (0.2 + 2.0 * PI)).abs() < 1e-9);
        let outside = step(&c, PhaseChord::new(0.2, 0.2 + PI + 0.05));
        assert!(matches!(outside, Err(Error::OutsidePhaseSpace { .. })));
    }

    #[test]
    fn generating_function_on_the_circle() {
        let c = circle();
        assert!(generating_function(&c, 0.4, 0.4).abs() < 1e-13);
        assert!((generating_function(&c, 0.0, PI / 2.0) - 1.0).abs() < 1e-12);
        assert!(generating_function(&c, 0.0, PI).abs() < 1e-12);
    }

    #[test]
    fn variational_residual_detects_bounces() {
        let c = circle();
        assert!(check_variational(&c, 0.0, PI / 4.0, PI / 2.0).abs() < 1e-12);
        assert!(check_variational(&c, 0.0, PI / 4.0, 0.6 * PI).abs() > 1e-3);
    }

    #[test]
    fn steps_reverse_and_stay_in_phase_space() {
        let spec = DomainSpec::ellipse(1.3, 0.9).with_harmonic(3, 0.02).with_grid(512);
        let c = AffineCurve::<f64>::build(&spec).unwrap();
        let mut chord = PhaseChord::new(0.37, 0.37 + 1.1);
        for _ in 0..25 {
            let next = step(&c, chord).unwrap();
            let r = check_variational(&c, chord.t0, next.t0, next.t1);
            assert!(r.abs() < 1e-10, "forward residual {r:e}");
            // reversed triple bounces too
            let rr = check_variational(&c, next.t1, next.t0, chord.t0);
            assert!(rr.abs() < 1e-10, "reversed residual {rr:e}");
            assert!(phase_form(&c, next.t0, next.t1) > 0.0);
            chord = next;
        }
    }

    #[test]
    fn trace_rows_carry_positions_and_gaps() {
        let c = circle();
        let rows = trace(&c, PhaseChord::new(0.0, 0.5), 12).unwrap();
        assert_eq!(rows.len(), 13);
        for row in &rows {
            assert!((row.gap - 0.5).abs() < 1e-10);
            assert!((row.x.powi(2) + row.y.powi(2) - 1.0).abs() < 1e-10);
        }
        assert!((rows[4].t - 2.0).abs() < 1e-10);
    }

    #[test]
    fn affine_equivariance_of_the_step() {
        let spec = DomainSpec::ellipse(1.2, 0.9).with_harmonic(4, 0.015).with_grid(512);
        let c = AffineCurve::<f64>::build(&spec).unwrap();
        let m = [[1.0, 0.6], [0.0, 1.0]];
        let im = c.apply_affine(m, [0.0, 0.0]).unwrap();
        let chord = PhaseChord::new(0.4, 1.7);
        let t2 = step(&c, chord).unwrap().t1;
        let t2_im = step(&im, chord).unwrap().t1;
        assert!((t2 - t2_im).abs() < 1e-8, "{t2} vs {t2_im}");
        let p = c.point(t2);
        let q = im.point(t2_im);
        let mapped = [m[0][0] * p[0] + m[0][1] * p[1], m[1][0] * p[0] + m[1][1] * p[1]];
        assert!((mapped[0] - q[0]).hypot(mapped[1] - q[1]) < 1e-8);
    }

    #[test]
    fn defect_vanishes_without_curvature_variation() {
        let c = circle();
        assert!(lazutkin_defect(&c, 1.0, 0.1).unwrap().abs() < 1e-12);
        let e = AffineCurve::<f64>::build(&DomainSpec::ellipse(2.0, 0.5).with_grid(512)).unwrap();
        for (t, eps) in [(0.3, 0.4), (2.0, 0.5), (4.0, 1.2)] {
            // the gap itself is preserved to machine precision; the defect
            // only carries the k'-noise of the flat curvature table times
            // eps^4/30
            let next = step(&e, PhaseChord::new(t, t + eps)).unwrap();
            assert!((next.gap() - eps).abs() < 1e-12);
            if eps < 1.0 {
                assert!(lazutkin_defect(&e, t, eps).unwrap().abs() < 1e-9);
            }
        }
    }

    #[test]
    fn defect_order_is_six() {
        let spec = DomainSpec::circle().with_harmonic(3, 0.01).with_grid(256);
        let c = AffineCurve::<DDouble>::build(&spec).unwrap();
        let t = DDouble::new(c.perimeter().hi() / 5.0);
        assert!(c.curvature_deriv_at(t).hi().abs() > 1e-3, "need k' != 0 here");
        let mut pts = Vec::new();
        for i in 0..9 {
            let eps = 1e-3 * 10f64.powf(i as f64 / 4.0);
            let d = lazutkin_defect(&c, t, DDouble::new(eps)).unwrap();
            pts.push((eps.ln(), d.hi().abs().ln()));
        }
        let n = pts.len() as f64;
        let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let (mx, my) = (sx / n, sy / n);
        let slope: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((5.7..=6.3).contains(&slope), "slope {slope}");
    }
}
