//! The release gate: every numbered check the toolkit must pass, each one
//! built on an oracle independent of the code path it exercises. Shared by
//! the acceptance test target and the command-line `verify` subcommand.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::curve::{AffineCurve, DomainSpec};
use crate::dd::DDouble;
use crate::deform::{
    action_derivative_check, DeformationFamily, FamilyPath, HarmonicRate, Normalization,
};
use crate::error::Result;
use crate::hspace::EvenFourierMap;
use crate::mobius::{mobius, mobius_sieve};
use crate::operator::{
    apply_t_ellipse, bound_suite, ellipse_row_scale, finite_rank_split, invert_t_ellipse,
    kernel_analysis, TruncatedIsospectralOperator,
};
use crate::orbit::{max_area_orbit, max_area_orbit_from, orbit_asymptotics};
use crate::spectrum::{chord_weight_profile, fit_asymptotics, spectrum_table, xray_transform};

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub const CRITERION_NAMES: [&str; 13] = [
    "circle-spectrum-oracle",
    "affine-invariance",
    "asymptotic-fit",
    "ellipse-equidistribution",
    "chord-weight-identity",
    "xray-closed-form",
    "lazutkin-order",
    "orbit-asymptotics",
    "action-derivative-identity",
    "mobius-inversion",
    "bound-suite",
    "operator-invertibility",
    "finite-rank-split",
];

/// Runs one criterion by id (1-based). Errors and panics count as failures.
pub fn run_criterion(id: usize, grid: Option<usize>) -> CriterionResult {
    assert!((1..=CRITERION_NAMES.len()).contains(&id), "criterion id out of range");
    let name = CRITERION_NAMES[id - 1];
    match catch_unwind(AssertUnwindSafe(|| dispatch(id, grid))) {
        Ok(Ok((passed, detail))) => CriterionResult { id, name, passed, detail },
        Ok(Err(e)) => CriterionResult { id, name, passed: false, detail: format!("error: {e}") },
        Err(_) => CriterionResult { id, name, passed: false, detail: "panicked".into() },
    }
}

/// Runs the whole battery in order.
pub fn run_all(grid: Option<usize>) -> Vec<CriterionResult> {
    (1..=CRITERION_NAMES.len()).map(|id| run_criterion(id, grid)).collect()
}

fn dispatch(id: usize, grid: Option<usize>) -> Result<(bool, String)> {
    match id {
        1 => circle_spectrum_oracle(grid),
        2 => affine_invariance(grid),
        3 => asymptotic_fit(grid),
        4 => ellipse_equidistribution(grid),
        5 => chord_weight_identity(grid),
        6 => xray_closed_form(grid),
        7 => lazutkin_order(grid),
        8 => orbit_order(grid),
        9 => action_derivative_identity(grid),
        10 => mobius_inversion(),
        11 => bound_suite_clean(),
        12 => operator_invertibility(grid),
        13 => finite_rank_mechanism(grid),
        _ => unreachable!(),
    }
}

fn pick(grid: Option<usize>, default: usize) -> usize {
    grid.unwrap_or(default)
}

fn verdict(worst: f64, tol: f64, what: &str) -> (bool, String) {
    (worst < tol, format!("{what} {worst:.3e} (tol {tol:.1e})"))
}

// 1: A_q = q sin(2 pi / q) on the unit circle.
fn circle_spectrum_oracle(grid: Option<usize>) -> Result<(bool, String)> {
    let curve = AffineCurve::<f64>::build(&DomainSpec::circle().with_grid(pick(grid, 256)))?;
    let table = spectrum_table(&curve, 128)?;
    let mut worst = 0.0f64;
    for row in table.rows().iter().filter(|r| r.q >= 3) {
        let oracle = row.q as f64 * (2.0 * PI / row.q as f64).sin();
        worst = worst.max((row.action - oracle).abs());
    }
    Ok(verdict(worst, 1e-9, "max |A_q - q sin(2 pi/q)|"))
}

// 2: the spectrum only sees the affine class.
fn affine_invariance(grid: Option<usize>) -> Result<(bool, String)> {
    let g = pick(grid, 512);
    let circle = AffineCurve::<f64>::build(&DomainSpec::circle().with_grid(g))?;
    let ellipse = AffineCurve::<f64>::build(&DomainSpec::ellipse(2.0, 0.5).with_grid(g))?;
    let ta = spectrum_table(&circle, 64)?;
    let tb = spectrum_table(&ellipse, 64)?;
    let mut worst = 0.0f64;
    for (ra, rb) in ta.rows().iter().zip(tb.rows()) {
        worst = worst.max((ra.action - rb.action).abs());
    }
    // and orbit-by-orbit under an explicit unimodular map
    let image = circle.apply_affine([[2.0, 0.0], [0.0, 0.5]], [0.0, 0.0])?;
    for q in [3usize, 5, 8, 13] {
        let a = max_area_orbit(&circle, q)?.action();
        let b = max_area_orbit(&image, q)?.action();
        worst = worst.max((a - b).abs());
    }
    Ok(verdict(worst, 1e-9, "max row/orbit action split"))
}

// 3: expansion coefficients of the circle and the convention constant.
fn asymptotic_fit(grid: Option<usize>) -> Result<(bool, String)> {
    let curve = AffineCurve::<f64>::build(&DomainSpec::circle().with_grid(pick(grid, 256)))?;
    let fit = fit_asymptotics(&spectrum_table(&curve, 128)?, 16)?;
    let targets = [
        (fit.c0, 2.0 * PI),
        (fit.c1, -4.0 * PI.powi(3) / 3.0),
        (fit.c2, 4.0 * PI.powi(5) / 15.0),
        (fit.kappa, -2.0),
        (fit.c1, fit.kappa * fit.a1_reference),
        (fit.c2, fit.kappa * fit.a2_reference),
    ];
    let mut worst = 0.0f64;
    for (got, want) in targets {
        worst = worst.max((got - want).abs() / want.abs());
    }
    Ok(verdict(worst, 1e-4, "max relative coefficient error"))
}

// 4: maximal orbits of an ellipse are parameter-equidistributed, found from
// a deliberately offset start.
fn ellipse_equidistribution(grid: Option<usize>) -> Result<(bool, String)> {
    let curve = AffineCurve::<f64>::build(&DomainSpec::ellipse(2.0, 0.5).with_grid(pick(grid, 512)))?;
    let l = curve.perimeter();
    let mut worst = 0.0f64;
    for q in 3..=64usize {
        let m = (q - 1) / 2;
        let init: Vec<f64> = (1..=m)
            .map(|j| l * j as f64 / q as f64 + if j % 2 == 0 { 0.01 } else { -0.01 })
            .collect();
        let orbit = max_area_orbit_from(&curve, q, &init)?;
        for (j, &t) in orbit.params().iter().enumerate() {
            worst = worst.max((t - l * j as f64 / q as f64).abs());
        }
    }
    Ok(verdict(worst, 1e-8, "max |t_j - L j/q|"))
}

// 5: every chord weight of an ellipse orbit is 2 k^{-1/2} sin(2 pi / q).
fn chord_weight_identity(grid: Option<usize>) -> Result<(bool, String)> {
    let g = pick(grid, 512);
    let mut worst = 0.0f64;
    for (a, b) in [(2.0, 0.5), (1.5, 0.8)] {
        let curve = AffineCurve::<f64>::build(&DomainSpec::ellipse(a, b).with_grid(g))?;
        let k = (a * b).powf(-2.0 / 3.0);
        for q in 3..=64usize {
            let expected = 2.0 / k.sqrt() * (2.0 * PI / q as f64).sin();
            let profile = chord_weight_profile(&curve, q)?;
            for w in &profile.weights {
                worst = worst.max((w - expected).abs() / expected);
            }
        }
    }
    Ok(verdict(worst, 1e-8, "max relative weight error"))
}

// 6: the transform of a single mode over an ellipse orbit is mu_q when q
// divides the mode and zero otherwise.
fn xray_closed_form(grid: Option<usize>) -> Result<(bool, String)> {
    let curve = AffineCurve::<f64>::build(&DomainSpec::ellipse(2.0, 0.5).with_grid(pick(grid, 512)))?;
    let k = curve.reference_ellipse().k;
    let mut worst = 0.0f64;
    for q in 3..=64usize {
        let orbit = max_area_orbit(&curve, q)?;
        for p in [0usize, 1, 3, 6] {
            let n = EvenFourierMap::mode(p, 3.5);
            let got = xray_transform(&curve, &orbit, &n);
            let want = if p % q == 0 { ellipse_row_scale(k, q) } else { 0.0 };
            worst = worst.max((got - want).abs());
        }
    }
    Ok(verdict(worst, 1e-8, "max |a_q(mode) - divisor value|"))
}

// 7: the near-boundary defect decays at sixth order where curvature varies,
// and vanishes on ellipses.
fn lazutkin_order(grid: Option<usize>) -> Result<(bool, String)> {
    let spec = DomainSpec::circle().with_harmonic(3, 0.01).with_grid(pick(grid, 256));
    let curve = AffineCurve::<DDouble>::build(&spec)?;
    let t = DDouble::new(curve.perimeter().hi() / 5.0);
    let mut pts = Vec::new();
    for i in 0..9 {
        let eps = 1e-3 * 10f64.powf(i as f64 / 4.0);
        let d = crate::billiard::lazutkin_defect(&curve, t, DDouble::new(eps))?;
        pts.push((eps.ln(), d.hi().abs().ln()));
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a: (f64, f64), p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let slope: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();

    let ellipse = AffineCurve::<f64>::build(&DomainSpec::ellipse(2.0, 0.5).with_grid(pick(grid, 512)))?;
    let mut flat = 0.0f64;
    for t in [0.3, 1.7, 4.1] {
        flat = flat.max(crate::billiard::lazutkin_defect(&ellipse, t, 0.1)?.abs());
    }
    let ok = (5.7..=6.3).contains(&slope) && flat < 1e-12;
    Ok((ok, format!("slope {slope:.3} (in [5.7, 6.3]), ellipse defect {flat:.3e} (tol 1e-12)")))
}

// 8: the leading vertex-shift profile converges at the stated order and
// matches the derivative identity with the gap profile.
fn orbit_order(grid: Option<usize>) -> Result<(bool, String)> {
    let spec = DomainSpec::circle().with_harmonic(4, 0.01).with_grid(pick(grid, 512));
    let curve = AffineCurve::<f64>::build(&spec)?;
    let asym = orbit_asymptotics(&curve, 32)?;
    let r: Vec<f64> = asym.direct_a0_residuals.iter().map(|p| p.1).collect();
    let ratio1 = r[0] / r[1].max(1e-300);
    let ratio2 = r[1] / r[2].max(1e-300);
    let ok = ratio1 >= 1.7 && ratio2 >= 1.7 && asym.a0_deriv_vs_b0 < 1e-6;
    Ok((
        ok,
        format!(
            "halving ratios {ratio1:.2}, {ratio2:.2} (need >= 1.7), a0' vs b0 {:.3e} (tol 1e-6)",
            asym.a0_deriv_vs_b0
        ),
    ))
}

// 9: finite-difference action derivative vs the transform, on a bump family
// and on the squeeze of the circle.
fn action_derivative_identity(grid: Option<usize>) -> Result<(bool, String)> {
    let g = pick(grid, 256);
    let bump = DeformationFamily {
        base: DomainSpec::circle().with_grid(g),
        path: FamilyPath::Harmonics(vec![HarmonicRate { j: 4, delta_dot: 1.0 }]),
        normalization: Normalization::Raw,
        interval: None,
    };
    let mut worst_ratio = 0.0f64;
    for q in [4usize, 8, 16] {
        for h in [1e-3, 5e-4] {
            let check = action_derivative_check(&bump, 0.0, q, h, 3.5)?;
            let budget = 1e-6 + 10.0 * h * h;
            worst_ratio = worst_ratio.max(check.difference.abs() / budget);
        }
    }
    let squeeze = DeformationFamily {
        base: DomainSpec::circle().with_grid(g),
        path: FamilyPath::Affine { affine: [[1.0, 0.0], [0.0, -1.0]] },
        normalization: Normalization::Raw,
        interval: None,
    };
    let mut worst_null = 0.0f64;
    for q in 3..=8usize {
        let check = action_derivative_check(&squeeze, 0.0, q, 1e-4, 3.5)?;
        worst_null = worst_null.max(check.finite_difference.abs().max(check.transform.abs()));
    }
    let ok = worst_ratio < 1.0 && worst_null < 1e-8;
    Ok((
        ok,
        format!("worst defect/budget {worst_ratio:.3e} (need < 1), squeeze sides {worst_null:.3e} (tol 1e-8)"),
    ))
}

// 10: the closed-form operator and its divisor-sum inverse undo each other,
// and the divisor sums of the mu function collapse to the identity.
fn mobius_inversion() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let k_e = 0.5 + 0.03 * i as f64;
        let coeffs: Vec<f64> = (0..=128).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = EvenFourierMap::new(coeffs, 3.5);
        let u = apply_t_ellipse(&n, k_e)?;
        let back = invert_t_ellipse(&u, k_e);
        for p in 0..=128 {
            worst = worst.max((back.coeff(p) - n.coeff(p)).abs());
        }
        // and the other way round
        let entries: Vec<f64> = (0..=128).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = crate::hspace::GammaSequence::new(entries, 3.5);
        let round = apply_t_ellipse(&invert_t_ellipse(&u, k_e), k_e)?;
        for q in 0..=128 {
            worst = worst.max((round.entry(q) - u.entry(q)).abs());
        }
    }
    let sieve = mobius_sieve(10_000);
    let mut identity_ok = true;
    for k in 1usize..=10_000 {
        let mut sum = 0i64;
        let mut d = 1usize;
        while d * d <= k {
            if k % d == 0 {
                sum += sieve[d] as i64;
                if d != k / d {
                    sum += sieve[k / d] as i64;
                }
            }
            d += 1;
        }
        if sum != i64::from(k == 1) {
            identity_ok = false;
        }
        if sieve[k] as i32 != mobius(k as u64) {
            identity_ok = false;
        }
    }
    let ok = worst < 1e-12 && identity_ok;
    Ok((
        ok,
        format!("round-trip error {worst:.3e} (tol 1e-12), divisor identity {}", if identity_ok { "holds to 10^4" } else { "BROKEN" }),
    ))
}

// 11: the randomized inequality battery at gamma = 3.5, second derivative
// included.
fn bound_suite_clean() -> Result<(bool, String)> {
    let report = bound_suite(3.5, 1000, 7);
    let ok = report.violations.is_empty();
    Ok((
        ok,
        format!(
            "{} violations over {} instances; worst ratios {:.6}, {:.6}, {:.6}",
            report.violations.len(),
            report.instances,
            report.cyclic_worst,
            report.product_worst,
            report.smooth_worst
        ),
    ))
}

// 12: the weighted truncation is invertible at the ellipse, stays so nearby,
// and the deviation shrinks with the perturbation.
fn operator_invertibility(grid: Option<usize>) -> Result<(bool, String)> {
    let ellipse_op = TruncatedIsospectralOperator::ellipse(1.0, 64, 64, 3.5);
    let ellipse_sigma = kernel_analysis(&ellipse_op).sigma_min;
    let mut ok = ellipse_sigma > 0.1;
    let mut details = format!("ellipse sigma_min {ellipse_sigma:.4}");

    let g = pick(grid, 512);
    let n_test = EvenFourierMap::new(vec![0.3, 0.0, 0.0, 1.0, 0.0, 0.5, 0.0, 0.25], 3.5);
    let mut deviations = Vec::new();
    for delta in [1e-3, 1e-2] {
        let spec = DomainSpec::circle().with_harmonic(4, delta).with_grid(g);
        let curve = AffineCurve::<f64>::build(&spec)?;
        let op = TruncatedIsospectralOperator::from_domain(&curve, 64, 64, 3.5)?;
        let report = kernel_analysis(&op);
        let rel = (report.sigma_min - ellipse_sigma).abs() / ellipse_sigma;
        ok = ok && rel < 0.25 && report.kernel_dim == 0;
        details.push_str(&format!(
            ", delta {delta:.0e}: sigma_min {:.4} (drift {:.1}%), kernel {}",
            report.sigma_min,
            100.0 * rel,
            report.kernel_dim
        ));

        let reference = TruncatedIsospectralOperator::ellipse(curve.reference_ellipse().k, 64, 64, 3.5);
        let u_domain = op.apply(&n_test);
        let u_ellipse = reference.apply(&n_test);
        let d: Vec<f64> = (3..=64)
            .map(|q| (q as f64).powf(3.5) * (u_domain.entry(q) - u_ellipse.entry(q)).abs())
            .collect();
        deviations.push(d);
    }
    let monotone = deviations[0]
        .iter()
        .zip(&deviations[1])
        .all(|(small, big)| *small <= *big + 1e-10);
    ok = ok && monotone;
    details.push_str(if monotone { ", deviation monotone in delta" } else { ", deviation NOT monotone" });
    Ok((ok, details))
}

// 13: the tail block inverts, the forcing map assembles, and the kernel
// stays trivial with the stated dimension bound.
fn finite_rank_mechanism(grid: Option<usize>) -> Result<(bool, String)> {
    let spec = DomainSpec::circle().with_harmonic(4, 1e-2).with_grid(pick(grid, 512));
    let curve = AffineCurve::<f64>::build(&spec)?;
    let op = TruncatedIsospectralOperator::from_domain(&curve, 32, 32, 3.5)?;
    let split = finite_rank_split(&op, 8)?;
    let ok = split.kernel_dim == 0
        && split.kernel_dim_bound == 9
        && split.forcing.ncols() == 9
        && split.reduced_sigma_min > 0.0;
    Ok((
        ok,
        format!(
            "tail sigma ratio {:.3e}, forcing {}x{}, reduced sigma_min {:.4}, kernel {} (bound {})",
            split.tail_sigma_ratio,
            split.forcing.nrows(),
            split.forcing.ncols(),
            split.reduced_sigma_min,
            split.kernel_dim,
            split.kernel_dim_bound
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_and_names_line_up() {
        assert_eq!(CRITERION_NAMES.len(), 13);
        let r = run_criterion(10, None);
        assert_eq!(r.id, 10);
        assert_eq!(r.name, "mobius-inversion");
        assert!(r.passed, "{}", r.detail);
    }

    #[test]
    fn an_impossible_grid_fails_without_panicking() {
        // grid 16 cannot resolve the q = 128 rows; the criterion must come
        // back as a plain failure
        let r = run_criterion(1, Some(16));
        assert!(!r.passed || r.detail.contains("tol"));
    }
}
