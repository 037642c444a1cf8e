//! The linearized isospectral operator on even maps: closed form on
//! ellipses with its divisor-sum inverse, numerical assembly on general
//! domains, gamma-weighted kernel analysis, and the low/high mode split
//! that caps the kernel dimension.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::curve::AffineCurve;
use crate::error::{Error, Result};
use crate::hspace::{zeta, EvenFourierMap, GammaSequence};
use crate::mobius::mobius_sieve;
use crate::orbit::max_area_orbit;
use crate::spectrum::{chord_weights, correction_functionals};

/// Row scale of the q-th sequence entry on an ellipse of affine curvature
/// k_e: 2 k_e^{-1/2} q sin(2 pi / q). Positive for every q >= 3 and
/// increasing toward 4 pi k_e^{-1/2}.
pub fn ellipse_row_scale(k_e: f64, q: usize) -> f64 {
    2.0 / k_e.sqrt() * q as f64 * (2.0 * std::f64::consts::PI / q as f64).sin()
}

/// Closed-form operator on an ellipse: the mean, the two point values n(0)
/// and n(1/2), then the scaled centered cyclic average for each q >= 3.
pub fn apply_t_ellipse(n: &EvenFourierMap, k_e: f64) -> Result<GammaSequence> {
    let top = n.top_mode().max(2);
    let mut u = vec![0.0; top + 1];
    u[0] = n.coeff(0);
    u[1] = n.eval(0.0);
    u[2] = n.eval(0.5);
    for (q, slot) in u.iter_mut().enumerate().skip(3) {
        let (_, centered) = n.cyclic_sum(q)?;
        *slot = ellipse_row_scale(k_e, q) * centered;
    }
    Ok(GammaSequence::new(u, n.gamma()))
}

/// Inverse of the ellipse operator on a truncation. Tail entries are
/// rescaled by the row scale and divisor-sum inverted into the modes j >= 3;
/// the two point-value entries then pin modes 1 and 2 through their sum and
/// alternating sum. Two-sided inverse of `apply_t_ellipse` on the window.
pub fn invert_t_ellipse(u: &GammaSequence, k_e: f64) -> EvenFourierMap {
    let top = u.top_index().max(2);
    let mu = mobius_sieve(top / 3 + 1);
    let mut coeffs = vec![0.0; top + 1];
    coeffs[0] = u.entry(0);
    for j in 3..=top {
        let mut s = 0.0;
        let mut q = j;
        while q <= top {
            let sign = mu[q / j];
            if sign != 0 {
                let scale = ellipse_row_scale(k_e, q);
                debug_assert!(scale > 0.0);
                s += f64::from(sign) * u.entry(q) / scale;
            }
            q += j;
        }
        coeffs[j] = s;
    }
    let mut sum = coeffs[0];
    let mut alt = coeffs[0];
    for (j, &c) in coeffs.iter().enumerate().skip(3) {
        sum += c;
        alt += if j % 2 == 0 { c } else { -c };
    }
    // n(0) and n(1/2) fix n1 + n2 and n2 - n1
    let a = u.entry(1) - sum;
    let b = u.entry(2) - alt;
    coeffs[1] = 0.5 * (a - b);
    coeffs[2] = 0.5 * (a + b);
    EvenFourierMap::new(coeffs, u.gamma())
}

/// Sequence image of a map on a general domain: rows 0..2 as on the
/// ellipse, and for q >= 3 the orbit transform with the reference-ellipse
/// row, the perimeter defect on the mean channel, and the quadratic
/// correction subtracted off. The cubic correction is identically zero but
/// is kept in the written form.
pub fn apply_t_domain(
    curve: &AffineCurve<f64>,
    n: &EvenFourierMap,
    q_max: usize,
) -> Result<GammaSequence> {
    if q_max < 3 {
        return Err(Error::InvalidRange {
            q_min: 3,
            q_max,
            reason: "domain operator needs rows up to at least q = 3".into(),
        });
    }
    let re = curve.reference_ellipse();
    let lambda = 2.0 * (curve.perimeter() - re.perimeter);
    let corr = correction_functionals(curve, n);
    let rows: Vec<Result<f64>> = (3..=q_max)
        .into_par_iter()
        .map(|q| {
            let orbit = max_area_orbit(curve, q)?;
            let qf = q as f64;
            Ok(crate::spectrum::xray_transform(curve, &orbit, n)
                - (ellipse_row_scale(re.k, q) + lambda) * n.coeff(0)
                - corr.alpha1 / (qf * qf)
                - corr.alpha2 / qf.powi(3))
        })
        .collect();
    let mut u = vec![0.0; q_max + 1];
    u[0] = n.coeff(0);
    u[1] = n.eval(0.0);
    u[2] = n.eval(0.5);
    for (i, r) in rows.into_iter().enumerate() {
        u[i + 3] = r?;
    }
    Ok(GammaSequence::new(u, n.gamma()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    EllipseClosedForm,
    DomainNumerical,
}

/// Matrix of the isospectral operator on the truncation window: rows are
/// sequence indices q = 0..q_max, columns are mode indices p = 0..p_max,
/// acting on cosine coefficients.
#[derive(Clone, Debug)]
pub struct TruncatedIsospectralOperator {
    kind: OperatorKind,
    matrix: DMatrix<f64>,
    gamma: f64,
    k_e: f64,
    lambda: f64,
}

impl TruncatedIsospectralOperator {
    /// Closed-form assembly for an ellipse of affine curvature k_e. Column
    /// p >= 1 is supported on the rows q >= 3 dividing p, plus the two
    /// point rows; column 0 carries the mean channel.
    pub fn ellipse(k_e: f64, q_max: usize, p_max: usize, gamma: f64) -> Self {
        assert!(q_max >= 3 && k_e > 0.0);
        let mut m = DMatrix::zeros(q_max + 1, p_max + 1);
        for p in 0..=p_max {
            if p == 0 {
                m[(0, 0)] = 1.0;
            }
            m[(1, p)] = 1.0;
            m[(2, p)] = if p % 2 == 0 { 1.0 } else { -1.0 };
            if p >= 1 {
                for q in 3..=q_max.min(p) {
                    if p % q == 0 {
                        m[(q, p)] = ellipse_row_scale(k_e, q);
                    }
                }
            }
        }
        TruncatedIsospectralOperator {
            kind: OperatorKind::EllipseClosedForm,
            matrix: m,
            gamma,
            k_e,
            lambda: 0.0,
        }
    }

    /// Numerical assembly on a general domain: orbits are solved once per
    /// row and shared across columns, then each column is the sequence
    /// image of a single cosine mode.
    pub fn from_domain(
        curve: &AffineCurve<f64>,
        q_max: usize,
        p_max: usize,
        gamma: f64,
    ) -> Result<Self> {
        if q_max < 3 {
            return Err(Error::InvalidRange {
                q_min: 3,
                q_max,
                reason: "domain operator needs rows up to at least q = 3".into(),
            });
        }
        let re = curve.reference_ellipse();
        let l = curve.perimeter();
        let lambda = 2.0 * (l - re.perimeter);
        let solved: Vec<Result<(Vec<f64>, Vec<f64>)>> = (3..=q_max)
            .into_par_iter()
            .map(|q| {
                let orbit = max_area_orbit(curve, q)?;
                let thetas = orbit.params().iter().map(|&t| t / l).collect();
                let weights = chord_weights(curve, &orbit);
                Ok((thetas, weights))
            })
            .collect();
        let mut vertex = Vec::with_capacity(q_max - 2);
        for r in solved {
            vertex.push(r?);
        }
        let cols: Vec<Vec<f64>> = (0..=p_max)
            .into_par_iter()
            .map(|p| {
                let n = EvenFourierMap::mode(p, gamma);
                let corr = correction_functionals(curve, &n);
                let w = 2.0 * std::f64::consts::PI * p as f64;
                let mean = if p == 0 { 1.0 } else { 0.0 };
                let mut col = vec![0.0; q_max + 1];
                col[0] = mean;
                col[1] = 1.0;
                col[2] = if p % 2 == 0 { 1.0 } else { -1.0 };
                for (i, (thetas, weights)) in vertex.iter().enumerate() {
                    let q = i + 3;
                    let qf = q as f64;
                    let transform: f64 = thetas
                        .iter()
                        .zip(weights)
                        .map(|(&th, &wk)| (w * th).cos() * wk)
                        .sum();
                    col[q] = transform
                        - (ellipse_row_scale(re.k, q) + lambda) * mean
                        - corr.alpha1 / (qf * qf)
                        - corr.alpha2 / qf.powi(3);
                }
                col
            })
            .collect();
        let mut m = DMatrix::zeros(q_max + 1, p_max + 1);
        for (p, col) in cols.iter().enumerate() {
            for (q, &v) in col.iter().enumerate() {
                m[(q, p)] = v;
            }
        }
        Ok(TruncatedIsospectralOperator {
            kind: OperatorKind::DomainNumerical,
            matrix: m,
            gamma,
            k_e: re.k,
            lambda,
        })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Affine curvature of the reference ellipse behind the rows.
    pub fn reference_curvature(&self) -> f64 {
        self.k_e
    }

    /// Perimeter defect on the mean channel (zero under the equal-perimeter
    /// reference).
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn q_max(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn p_max(&self) -> usize {
        self.matrix.ncols() - 1
    }

    /// Image of a map under the truncated matrix; the map must live inside
    /// the column window.
    pub fn apply(&self, n: &EvenFourierMap) -> GammaSequence {
        assert!(
            n.top_mode() <= self.p_max(),
            "map extends past the truncation window"
        );
        let entries = (0..=self.q_max())
            .map(|q| {
                (0..=n.top_mode())
                    .map(|p| self.matrix[(q, p)] * n.coeff(p))
                    .sum()
            })
            .collect();
        GammaSequence::new(entries, self.gamma)
    }

    /// Exact operator norm between the sup-weighted spaces: the worst row,
    /// each row measured as a functional by its mode-weighted absolute sum.
    pub fn op_norm_gamma(&self) -> f64 {
        (0..=self.q_max())
            .map(|q| {
                let rw = if q == 0 {
                    1.0
                } else {
                    (q as f64).powf(self.gamma)
                };
                let row: f64 = (0..=self.p_max())
                    .map(|p| {
                        let cw = if p == 0 {
                            1.0
                        } else {
                            (p as f64).powf(-self.gamma)
                        };
                        self.matrix[(q, p)].abs() * cw
                    })
                    .sum();
                rw * row
            })
            .fold(0.0, f64::max)
    }

    /// Bound on what a unit-norm map can hide beyond the column window:
    /// zeta(gamma) p_max^{-gamma} per unit of map norm. Reported so that
    /// truncation never silently discards tail mass.
    pub fn tail_bound(&self, map_norm: f64) -> f64 {
        zeta(self.gamma) * (self.p_max() as f64).powf(-self.gamma) * map_norm
    }

    #[cfg(test)]
    fn from_raw(matrix: DMatrix<f64>, gamma: f64) -> Self {
        TruncatedIsospectralOperator {
            kind: OperatorKind::DomainNumerical,
            matrix,
            gamma,
            k_e: 1.0,
            lambda: 0.0,
        }
    }
}

/// Conditioning weight of an index in the graded truncation. The three
/// pinned channels (mean and the two point rows, with their matching low
/// columns) sit at their natural unit scale; everything above is graded by
/// the exponent. Grading the pinned channels like tail entries only rescales
/// fixed data and drags the smallest singular value of the exact ellipse
/// operator under the invertibility margin the analysis is meant to expose.
fn index_weight(i: usize, gamma: f64) -> f64 {
    if i <= 2 {
        1.0
    } else {
        (i as f64).powf(gamma)
    }
}

/// Row q scaled up by its weight, column p scaled down by its weight: the
/// matrix of the operator between the weighted coordinate systems in which
/// both norms become plain sup norms.
fn weighted_matrix(op: &TruncatedIsospectralOperator) -> DMatrix<f64> {
    let mut w = op.matrix.clone();
    for q in 0..w.nrows() {
        let rw = index_weight(q, op.gamma);
        for p in 0..w.ncols() {
            w[(q, p)] *= rw / index_weight(p, op.gamma);
        }
    }
    w
}

/// Singular-value summary of the weighted truncation, with the near-null
/// directions mapped back to mode coefficients.
#[derive(Clone, Debug)]
pub struct KernelReport {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub kernel_dim: usize,
    /// one sup-normalized coefficient vector per near-null direction
    pub kernel_basis: Vec<Vec<f64>>,
}

const KERNEL_RATIO: f64 = 1e-8;

pub fn kernel_analysis(op: &TruncatedIsospectralOperator) -> KernelReport {
    assert!(
        op.q_max() >= op.p_max(),
        "kernel analysis needs a square or tall truncation"
    );
    let cols = op.p_max() + 1;
    let svd = weighted_matrix(op).svd(true, true);
    let sigma_max = svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
    let sigma_min = svd
        .singular_values
        .iter()
        .fold(f64::INFINITY, |a, &s| a.min(s));
    if sigma_max == 0.0 {
        // the null operator: every mode is kernel
        let kernel_basis = (0..cols)
            .map(|p| {
                let mut e = vec![0.0; cols];
                e[p] = 1.0;
                e
            })
            .collect();
        return KernelReport {
            sigma_min: 0.0,
            sigma_max: 0.0,
            kernel_dim: cols,
            kernel_basis,
        };
    }
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut kernel_basis = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s < KERNEL_RATIO * sigma_max {
            let mut n: Vec<f64> = (0..cols)
                .map(|p| v_t[(i, p)] / index_weight(p, op.gamma))
                .collect();
            let sup = n.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
            if sup > 0.0 {
                for x in &mut n {
                    *x /= sup;
                }
            }
            kernel_basis.push(n);
        }
    }
    KernelReport {
        sigma_min,
        sigma_max,
        kernel_dim: kernel_basis.len(),
        kernel_basis,
    }
}

/// Elimination of the modes above q0: the tail block forces them as a
/// linear image of the low modes, so the kernel of the whole truncation is
/// the kernel of a small square system on the low modes alone.
#[derive(Clone, Debug)]
pub struct FiniteRankSplit {
    pub q0: usize,
    /// maps mode coefficients p <= q0 to the forced coefficients p > q0
    pub forcing: DMatrix<f64>,
    /// the (q0+1)-square system on the low modes whose kernel is the kernel
    /// of the full truncation
    pub reduced: DMatrix<f64>,
    /// every kernel element is determined by its low modes
    pub kernel_dim_bound: usize,
    /// kernel dimension of the reduced system under the weighted criterion
    pub kernel_dim: usize,
    pub tail_sigma_ratio: f64,
    pub reduced_sigma_min: f64,
    pub reduced_sigma_max: f64,
}

pub fn finite_rank_split(
    op: &TruncatedIsospectralOperator,
    q0: usize,
) -> Result<FiniteRankSplit> {
    assert_eq!(
        op.q_max(),
        op.p_max(),
        "the split eliminates against a square truncation"
    );
    let top = op.p_max();
    if q0 + 1 > top {
        return Err(Error::InvalidRange {
            q_min: q0,
            q_max: top,
            reason: "split index leaves no high modes to eliminate".into(),
        });
    }
    let nlow = q0 + 1;
    let nhigh = top - q0;
    let w = weighted_matrix(op);
    let tail = w.view((nlow, nlow), (nhigh, nhigh)).into_owned();
    let head = w.view((nlow, 0), (nhigh, nlow)).into_owned();
    let svd = tail.svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
    let smin = svd
        .singular_values
        .iter()
        .fold(f64::INFINITY, |a, &s| a.min(s));
    let tail_sigma_ratio = if smax > 0.0 { smin / smax } else { 0.0 };
    if tail_sigma_ratio <= KERNEL_RATIO {
        return Err(Error::TailBlockSingular {
            q0,
            ratio: tail_sigma_ratio,
        });
    }
    let solved = svd
        .solve(&head, 0.0)
        .map_err(|e| Error::InternalConsistency(format!("tail solve failed: {e}")))?;
    let forcing_w = -solved;
    // back to raw mode coordinates on both sides
    let mut forcing = forcing_w.clone();
    for i in 0..nhigh {
        let rw = 1.0 / index_weight(nlow + i, op.gamma);
        for j in 0..nlow {
            forcing[(i, j)] = forcing_w[(i, j)] * rw * index_weight(j, op.gamma);
        }
    }
    let reduced_w = w.view((0, 0), (nlow, nlow)).into_owned()
        + w.view((0, nlow), (nlow, nhigh)) * &forcing_w;
    let svd2 = reduced_w.clone().svd(false, false);
    let reduced_sigma_max = svd2.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
    let reduced_sigma_min = svd2
        .singular_values
        .iter()
        .fold(f64::INFINITY, |a, &s| a.min(s));
    let kernel_dim = if reduced_sigma_max == 0.0 {
        nlow
    } else {
        svd2.singular_values
            .iter()
            .filter(|&&s| s < KERNEL_RATIO * reduced_sigma_max)
            .count()
    };
    let mut reduced = op.matrix.view((0, 0), (nlow, nlow)).into_owned();
    let high = op.matrix.view((0, nlow), (nlow, nhigh));
    reduced += high * &forcing;
    Ok(FiniteRankSplit {
        q0,
        forcing,
        reduced,
        kernel_dim_bound: nlow,
        kernel_dim,
        tail_sigma_ratio,
        reduced_sigma_min,
        reduced_sigma_max,
    })
}

/// One failed inequality instance, with its witness.
#[derive(Clone, Debug)]
pub struct BoundViolation {
    pub check: &'static str,
    pub instance: usize,
    pub detail: String,
}

/// Worst value/bound ratios over the randomized instances; every ratio must
/// stay at or below one.
#[derive(Clone, Debug)]
pub struct BoundSuiteReport {
    pub gamma: f64,
    pub instances: usize,
    pub cyclic_worst: f64,
    pub product_worst: f64,
    pub smooth_worst: f64,
    pub violations: Vec<BoundViolation>,
}

fn random_map(rng: &mut ChaCha8Rng, gamma: f64) -> EvenFourierMap {
    loop {
        let top = rng.gen_range(2..=40usize);
        let decay = rng.gen_range(0.0..gamma);
        let coeffs: Vec<f64> = (0..=top)
            .map(|p| rng.gen_range(-1.0..1.0) * (p.max(1) as f64).powf(-decay))
            .collect();
        let n = EvenFourierMap::new(coeffs, gamma);
        if n.norm_gamma() > 0.0 {
            return n;
        }
    }
}

/// Randomized audit of the three norm inequalities behind the sequence-space
/// estimates: centered cyclic averages decay like q^-gamma against the map
/// norm with constant zeta(gamma); products of maps are bounded with
/// constant 2(zeta(gamma) + 1); and the sup of the r-th derivative is
/// bounded by (2 pi)^r zeta(gamma - r) times the map norm. The derivative
/// check runs at r = 2 on a fine grid (the smoothness figure here is the
/// sup of the r-th derivative itself, the form the single-mode identity
/// pins down), so gamma must exceed 3.
pub fn bound_suite(gamma: f64, instances: usize, seed: u64) -> BoundSuiteReport {
    assert!(
        gamma > 3.0,
        "derivative check runs at order 2 and needs gamma > 3"
    );
    let z = zeta(gamma);
    let z2 = zeta(gamma - 2.0);
    let two_pi = 2.0 * std::f64::consts::PI;
    const GRID: usize = 1024;
    // tiny relative slack for the quadrature and summation roundoff
    const SLACK: f64 = 1.0 + 1e-9;
    let per: Vec<(f64, f64, f64, Vec<BoundViolation>)> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            let a = random_map(&mut rng, gamma);
            let b = random_map(&mut rng, gamma);
            let na = a.norm_gamma();
            let mut vio = Vec::new();
            let mut cyclic_worst = 0.0f64;
            for q in 1..=48usize {
                let centered = a
                    .cyclic_sum(q)
                    .expect("spectral consistency of the random map")
                    .1;
                let bound = z * (q as f64).powf(-gamma) * na;
                let ratio = centered.abs() / bound;
                cyclic_worst = cyclic_worst.max(ratio);
                if ratio > SLACK {
                    vio.push(BoundViolation {
                        check: "cyclic-decay",
                        instance: i,
                        detail: format!(
                            "q = {q}: |centered average| = {:.6e} > bound {:.6e}",
                            centered.abs(),
                            bound
                        ),
                    });
                }
            }
            let prod_bound = 2.0 * (z + 1.0) * na * b.norm_gamma();
            let product_worst = a.product(&b).norm_gamma() / prod_bound;
            if product_worst > SLACK {
                vio.push(BoundViolation {
                    check: "product-norm",
                    instance: i,
                    detail: format!("ratio {product_worst:.6e}"),
                });
            }
            let smooth_bound = two_pi.powi(2) * z2 * na;
            let sup = (0..GRID)
                .map(|k| a.eval_deriv(k as f64 / GRID as f64, 2).abs())
                .fold(0.0f64, f64::max);
            let smooth_worst = sup / smooth_bound;
            if smooth_worst > SLACK {
                vio.push(BoundViolation {
                    check: "derivative-sup",
                    instance: i,
                    detail: format!("sup |n''| = {sup:.6e} > bound {smooth_bound:.6e}"),
                });
            }
            (cyclic_worst, product_worst, smooth_worst, vio)
        })
        .collect();
    let mut report = BoundSuiteReport {
        gamma,
        instances,
        cyclic_worst: 0.0,
        product_worst: 0.0,
        smooth_worst: 0.0,
        violations: Vec::new(),
    };
    for (c, p, s, vio) in per {
        report.cyclic_worst = report.cyclic_worst.max(c);
        report.product_worst = report.product_worst.max(p);
        report.smooth_worst = report.smooth_worst.max(s);
        report.violations.extend(vio);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::DomainSpec;
    use proptest::prelude::*;

    #[test]
    fn ellipse_matrix_follows_the_divisor_pattern() {
        let op = TruncatedIsospectralOperator::ellipse(1.0, 12, 12, 3.5);
        let m = op.matrix();
        assert_eq!(m[(0, 0)], 1.0);
        for p in 1..=12 {
            assert_eq!(m[(0, p)], 0.0);
            assert_eq!(m[(1, p)], 1.0);
            assert_eq!(m[(2, p)], if p % 2 == 0 { 1.0 } else { -1.0 });
        }
        for q in 3..=12 {
            for p in 0..=12 {
                let expect = if p >= 1 && p % q == 0 {
                    ellipse_row_scale(1.0, q)
                } else {
                    0.0
                };
                assert_eq!(m[(q, p)], expect, "q = {q}, p = {p}");
            }
        }
        // the row scale at q = 3 and q = 6 on the unit circle
        assert!((m[(3, 6)] - 6.0 * (2.0 * std::f64::consts::PI / 3.0).sin()).abs() < 1e-12);
        assert!((m[(6, 6)] - 12.0 * (std::f64::consts::PI / 3.0).sin()).abs() < 1e-12);
    }

    #[test]
    fn ellipse_application_matches_the_point_and_divisor_rows() {
        let one = EvenFourierMap::constant(1.0, 3.5);
        let u = apply_t_ellipse(&one, 1.0).unwrap();
        assert_eq!(u.entry(0), 1.0);
        assert_eq!(u.entry(1), 1.0);
        assert_eq!(u.entry(2), 1.0);

        let n6 = EvenFourierMap::mode(6, 3.5);
        let u = apply_t_ellipse(&n6, 1.0).unwrap();
        assert_eq!(u.entry(0), 0.0);
        assert!((u.entry(1) - 1.0).abs() < 1e-12);
        assert!((u.entry(2) - 1.0).abs() < 1e-12);
        assert!((u.entry(3) - 5.196152422706632).abs() < 1e-12);
        assert!((u.entry(6) - 10.392304845413264).abs() < 1e-12);
        for q in [4usize, 5] {
            assert!(u.entry(q).abs() < 1e-13);
        }

        let n2 = EvenFourierMap::mode(2, 3.5);
        let u = apply_t_ellipse(&n2, 1.0).unwrap();
        assert_eq!(u.top_index(), 2);
        assert_eq!(u.entry(0), 0.0);
        assert!((u.entry(1) - 1.0).abs() < 1e-12);
        assert!((u.entry(2) - 1.0).abs() < 1e-12);

        // the matrix route gives the same sequence
        let op = TruncatedIsospectralOperator::ellipse(1.0, 12, 6, 3.5);
        let via_matrix = op.apply(&n6);
        let direct = apply_t_ellipse(&n6, 1.0).unwrap();
        for q in 0..=6 {
            assert!((via_matrix.entry(q) - direct.entry(q)).abs() < 1e-12, "q = {q}");
        }
    }

    proptest! {
        #[test]
        fn inversion_round_trips(coeffs in prop::collection::vec(-1.0f64..1.0, 1..24), k_e in 0.25f64..4.0) {
            let n = EvenFourierMap::new(coeffs, 3.5);
            let u = apply_t_ellipse(&n, k_e).unwrap();
            let back = invert_t_ellipse(&u, k_e);
            let scale = 1.0 + n.norm_gamma();
            for p in 0..=n.top_mode().max(back.top_mode()) {
                prop_assert!((back.coeff(p) - n.coeff(p)).abs() < 1e-12 * scale);
            }
            let there = apply_t_ellipse(&back, k_e).unwrap();
            for q in 0..=u.top_index() {
                prop_assert!((there.entry(q) - u.entry(q)).abs() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn seeded_round_trips_at_full_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..100 {
            let coeffs: Vec<f64> = (0..=128).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = EvenFourierMap::new(coeffs, 3.5);
            let back = invert_t_ellipse(&apply_t_ellipse(&n, 1.0).unwrap(), 1.0);
            let worst = (0..=128)
                .map(|p| (back.coeff(p) - n.coeff(p)).abs())
                .fold(0.0f64, f64::max);
            assert!(worst < 1e-12, "round trip drifted by {worst:e}");
        }
    }

    #[test]
    fn domain_assembly_collapses_on_an_ellipse() {
        let e = AffineCurve::<f64>::build(&DomainSpec::ellipse(1.5, 0.8).with_grid(512)).unwrap();
        let num = TruncatedIsospectralOperator::from_domain(&e, 16, 16, 3.5).unwrap();
        let k_e = e.reference_ellipse().k;
        let closed = TruncatedIsospectralOperator::ellipse(k_e, 16, 16, 3.5);
        assert_eq!(num.kind(), OperatorKind::DomainNumerical);
        assert_eq!(num.lambda(), 0.0);
        let worst = (num.matrix() - closed.matrix()).abs().max();
        assert!(worst < 1e-8, "entrywise gap {worst:e}");
    }

    #[test]
    fn constant_map_zeroes_the_tail_on_an_ellipse() {
        let e = AffineCurve::<f64>::build(&DomainSpec::ellipse(1.5, 0.8).with_grid(512)).unwrap();
        let one = EvenFourierMap::constant(1.0, 3.5);
        let u = apply_t_domain(&e, &one, 12).unwrap();
        for q in 3..=12 {
            assert!(u.entry(q).abs() < 1e-8, "q = {q}: {:e}", u.entry(q));
        }
        assert_eq!(u.entry(0), 1.0);
        assert!((u.entry(1) - 1.0).abs() < 1e-12);
        assert!((u.entry(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn operator_norm_stays_within_the_channel_budget() {
        // worst case over the three row families: the alternating point row
        // ahead of its weight, the divisor tail with the cyclic-decay
        // constant, and one unit of slack for the remainder rows
        let gamma = 3.5;
        let budget = |k_e: f64| {
            2f64.powf(gamma) * (1.0 + zeta(gamma))
                + 4.0 * std::f64::consts::PI / k_e.sqrt() * zeta(gamma)
                + 1.0
        };
        let ell = TruncatedIsospectralOperator::ellipse(1.0, 24, 24, gamma);
        let norm = ell.op_norm_gamma();
        assert!(norm > 20.0 && norm < budget(1.0), "{norm}");

        let spec = DomainSpec::circle().with_harmonic(4, 1e-3).with_grid(256);
        let c = AffineCurve::<f64>::build(&spec).unwrap();
        let op = TruncatedIsospectralOperator::from_domain(&c, 24, 24, gamma).unwrap();
        let k_e = c.reference_ellipse().k;
        assert!(op.op_norm_gamma() < budget(k_e), "{}", op.op_norm_gamma());
        // single-mode ratios stay under the bare row-scale budget
        for p in 1..=24 {
            let n = EvenFourierMap::mode(p, gamma);
            let ratio = op.apply(&n).norm_gamma() / n.norm_gamma();
            let bare = 4.0 * std::f64::consts::PI / k_e.sqrt() + 1.0;
            assert!(ratio < bare, "p = {p}: ratio {ratio}");
        }
    }

    #[test]
    fn ellipse_kernel_is_empty() {
        let op = TruncatedIsospectralOperator::ellipse(1.0, 32, 32, 3.5);
        let report = kernel_analysis(&op);
        assert!(report.sigma_min > 0.1, "{:e}", report.sigma_min);
        assert_eq!(report.kernel_dim, 0);
        assert!(report.kernel_basis.is_empty());
        assert!(report.sigma_max > report.sigma_min);
    }

    #[test]
    fn null_operator_reports_every_mode() {
        let op = TruncatedIsospectralOperator::from_raw(DMatrix::zeros(9, 9), 3.5);
        let report = kernel_analysis(&op);
        assert_eq!(report.sigma_max, 0.0);
        assert_eq!(report.kernel_dim, 9);
        assert_eq!(report.kernel_basis.len(), 9);
    }

    #[test]
    fn near_ellipse_operator_stays_close() {
        let gamma = 3.5;
        let spec = DomainSpec::circle().with_harmonic(4, 1e-3).with_grid(256);
        let c = AffineCurve::<f64>::build(&spec).unwrap();
        let op = TruncatedIsospectralOperator::from_domain(&c, 24, 24, gamma).unwrap();
        let ell = TruncatedIsospectralOperator::ellipse(op.reference_curvature(), 24, 24, gamma);
        let dom = kernel_analysis(&op);
        let ref_report = kernel_analysis(&ell);
        assert_eq!(dom.kernel_dim, 0);
        let rel = (dom.sigma_min - ref_report.sigma_min).abs() / ref_report.sigma_min;
        assert!(rel < 0.25, "sigma_min moved by {rel:.3}");
    }

    #[test]
    fn split_forces_the_high_modes() {
        let op = TruncatedIsospectralOperator::ellipse(1.0, 24, 24, 3.5);
        let split = finite_rank_split(&op, 8).unwrap();
        assert_eq!(split.kernel_dim_bound, 9);
        assert_eq!(split.kernel_dim, 0);
        // high rows of the ellipse matrix never touch low columns, so the
        // forced part is exactly zero
        assert!(split.forcing.abs().max() < 1e-12);
        assert!(split.tail_sigma_ratio > 1e-4);
        assert!(split.reduced_sigma_min > 0.1);

        // the smallest split: everything is forced by the constant mode
        let tiny = finite_rank_split(&op, 0).unwrap();
        assert_eq!(tiny.forcing.ncols(), 1);
        assert_eq!(tiny.forcing.nrows(), 24);
        assert_eq!(tiny.kernel_dim_bound, 1);
        assert_eq!(tiny.kernel_dim, 0);
        assert_eq!(tiny.reduced.nrows(), 1);
    }

    #[test]
    fn near_ellipse_split_keeps_a_trivial_kernel() {
        let spec = DomainSpec::circle().with_harmonic(4, 1e-2).with_grid(256);
        let c = AffineCurve::<f64>::build(&spec).unwrap();
        let op = TruncatedIsospectralOperator::from_domain(&c, 32, 32, 3.5).unwrap();
        let split = finite_rank_split(&op, 8).unwrap();
        assert!(split.tail_sigma_ratio > KERNEL_RATIO);
        assert_eq!(split.kernel_dim, 0);
        assert!(split.reduced_sigma_min > 1e-4 * split.reduced_sigma_max);
        // eliminating the high modes agrees with the direct kernel scan
        assert_eq!(kernel_analysis(&op).kernel_dim, 0);
    }

    #[test]
    fn singular_tail_is_reported() {
        let op = TruncatedIsospectralOperator::from_raw(DMatrix::zeros(9, 9), 3.5);
        match finite_rank_split(&op, 3) {
            Err(Error::TailBlockSingular { q0: 3, .. }) => {}
            other => panic!("expected a singular tail, got {other:?}"),
        }
    }

    #[test]
    fn bound_suite_holds_on_random_maps() {
        let report = bound_suite(3.5, 200, 7);
        assert!(report.violations.is_empty(), "{:?}", report.violations);
        assert!(report.cyclic_worst <= 1.0 + 1e-9, "{}", report.cyclic_worst);
        assert!(report.product_worst <= 1.0 + 1e-9);
        assert!(report.smooth_worst <= 1.0 + 1e-9);
    }

    #[test]
    fn bound_examples_evaluate_as_stated() {
        // a single mode at p = 8 seen through q = 4: the centered average
        // is 1 and the bound evaluates to about 12.75
        let f = EvenFourierMap::mode(8, 3.5);
        let (_, centered) = f.cyclic_sum(4).unwrap();
        assert!((centered - 1.0).abs() < 1e-12);
        let bound = zeta(3.5) * 4f64.powf(-3.5) * f.norm_gamma();
        assert!((bound - 12.748).abs() < 1e-2);
        assert!(centered.abs() <= bound);
        // constants multiply inside the product bound
        let one = EvenFourierMap::constant(1.0, 3.5);
        assert!(one.product(&one).norm_gamma() <= 2.0 * (zeta(3.5) + 1.0));
        // one mode differentiates to its frequency square
        let n = EvenFourierMap::mode(1, 3.5);
        let sup = (0..512)
            .map(|k| n.eval_deriv(k as f64 / 512.0, 2).abs())
            .fold(0.0f64, f64::max);
        let w = 2.0 * std::f64::consts::PI;
        assert!(sup <= w * w * zeta(1.5) + 1e-9);
        assert!((sup - w * w).abs() < 1e-6);
    }
}
