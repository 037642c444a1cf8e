//! The seven subcommands. Each one loads its input, runs the toolkit, and
//! emits a single artifact (file or stdout) plus a short summary on stderr.
//! Exit codes: 0 success, 1 acceptance failure, 2 invalid input, 3 numerical
//! failure.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use rayon::prelude::*;

use sympb_core::{
    fit_asymptotics, isospectral_residuals, kernel_analysis, max_area_orbit, sample_family,
    spectrum_table, xray_transform, AffineCurve, ConicClass, DeformationFamily, DomainSpec,
    Error as CoreError, EvenFourierMap, OperatorKind, TruncatedIsospectralOperator,
};
use sympb_core::{finite_rank_split, verify};

use crate::export::{csv, csv_field, emit, f17, int_array, num_array, obj_array, JsonObj};

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub struct Ctx {
    pub spec: Option<PathBuf>,
    pub q_min: usize,
    pub q_max: usize,
    pub gamma: f64,
    pub grid: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

pub struct Failure {
    pub code: i32,
    pub msg: String,
}

impl Failure {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Failure { code: 2, msg: msg.into() }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        use CoreError::*;
        let code = match e {
            InvalidSpec(_) | NonConvex { .. } | UnderResolved { .. } | NotAreaPreserving(_)
            | InvalidRange { .. } | Normalization(_) | NotAnEllipse(_) => 2,
            _ => 3,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn read_spec(path: &Option<PathBuf>) -> Result<String, Failure> {
    let path = path
        .as_ref()
        .ok_or_else(|| Failure::invalid("missing --spec PATH"))?;
    fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))
}

fn load_curve(ctx: &Ctx) -> Result<AffineCurve<f64>, Failure> {
    let mut spec = DomainSpec::from_json(&read_spec(&ctx.spec)?)?;
    if let Some(g) = ctx.grid {
        spec.grid_size = g;
    }
    Ok(AffineCurve::<f64>::build(&spec)?)
}

fn write_artifact(out: Option<&Path>, content: &str) -> Result<(), Failure> {
    emit(out, content).map_err(|e| Failure::invalid(format!("cannot write output: {e}")))
}

fn require_orbit_range(ctx: &Ctx) -> Result<(), Failure> {
    if ctx.q_min < 3 {
        return Err(Failure::invalid("orbit computations need q_min >= 3"));
    }
    Ok(())
}

fn require_gamma_window(gamma: f64) -> Result<(), Failure> {
    if !(gamma.is_finite() && gamma > 3.0 && gamma < 4.0) {
        return Err(Failure::invalid(format!(
            "gamma = {gamma} outside the admissible window (3, 4)"
        )));
    }
    Ok(())
}

pub fn domain(ctx: &Ctx) -> Result<(), Failure> {
    let curve = load_curve(ctx)?;
    let d = curve.diagnostics().clone();
    let l = curve.perimeter();
    let series = curve.curvature_series();

    let m = 256usize;
    let mut rows_csv = Vec::with_capacity(m);
    let mut rows_json = Vec::with_capacity(m);
    let (mut k_min, mut k_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..m {
        let t = l * i as f64 / m as f64;
        let p = curve.point(t);
        let k = series.eval(t);
        k_min = k_min.min(k);
        k_max = k_max.max(k);
        rows_csv.push(format!("{},{},{},{}", f17(t), f17(p[0]), f17(p[1]), f17(k)));
        let mut o = JsonObj::new();
        o.num("t", t).num("x", p[0]).num("y", p[1]).num("k", k);
        rows_json.push(o.inline());
    }
    let conic = match curve.detect_conic() {
        ConicClass::Ellipse { .. } => "ellipse",
        ConicClass::NonConic => "non-conic",
    };

    eprintln!("perimeter L = {}", f17(l));
    eprintln!("affine curvature k in [{}, {}]", f17(k_min), f17(k_max));
    eprintln!("distance to reference ellipse delta_hat = {:.3e}", d.delta_hat);
    eprintln!(
        "residuals: frame {:.3e}, symmetry {:.3e}, curvature split {:.3e}",
        d.frame_det, d.symmetry, d.curvature_mismatch
    );
    eprintln!("conic class: {conic}");

    let content = match ctx.format {
        Format::Csv => csv("t,x,y,k", &rows_csv),
        Format::Json => {
            let mut o = JsonObj::report();
            o.num("perimeter", l)
                .num("k_min", k_min)
                .num("k_max", k_max)
                .num("k_mean", d.k_mean)
                .num("delta_hat", d.delta_hat)
                .num("frame_residual", d.frame_det)
                .num("symmetry_residual", d.symmetry)
                .num("third_derivative_residual", d.third_deriv)
                .num("tangent_norm_residual", d.tangent_norm)
                .num("curvature_mismatch", d.curvature_mismatch)
                .str("conic", conic)
                .raw("rows", &obj_array(&rows_json));
            o.finish()
        }
    };
    write_artifact(ctx.out.as_deref(), &content)
}

pub fn orbit(ctx: &Ctx) -> Result<(), Failure> {
    require_orbit_range(ctx)?;
    let curve = load_curve(ctx)?;
    let solved: Vec<_> = (ctx.q_min..=ctx.q_max)
        .into_par_iter()
        .map(|q| max_area_orbit(&curve, q))
        .collect();
    let mut orbits = Vec::with_capacity(solved.len());
    for r in solved {
        orbits.push(r?);
    }

    let worst = orbits.iter().map(|o| o.residual()).fold(0.0f64, f64::max);
    eprintln!(
        "solved {} orbits (q = {}..={}), worst closure residual {worst:.3e}",
        orbits.len(),
        ctx.q_min,
        ctx.q_max
    );

    let content = match ctx.format {
        Format::Csv => {
            let mut rows = Vec::new();
            for o in &orbits {
                for (j, &t) in o.params().iter().enumerate() {
                    let p = curve.point(t);
                    rows.push(format!(
                        "{},{},{},{},{}",
                        o.q(),
                        j,
                        f17(t),
                        f17(p[0]),
                        f17(p[1])
                    ));
                }
            }
            csv("q,j,t,x,y", &rows)
        }
        Format::Json => {
            let items: Vec<String> = orbits
                .iter()
                .map(|o| {
                    let mut e = JsonObj::new();
                    e.int("q", o.q())
                        .num("action", o.action())
                        .num("residual", o.residual())
                        .num("gap_bound", o.gap_bound())
                        .raw("params", &num_array(o.params()));
                    e.inline()
                })
                .collect();
            let mut o = JsonObj::report();
            o.int("q_min", ctx.q_min)
                .int("q_max", ctx.q_max)
                .raw("orbits", &obj_array(&items));
            o.finish()
        }
    };
    write_artifact(ctx.out.as_deref(), &content)
}

pub fn spectrum(ctx: &Ctx) -> Result<(), Failure> {
    let curve = load_curve(ctx)?;
    let table = spectrum_table(&curve, ctx.q_max)?;
    let fit = fit_asymptotics(&table, ctx.q_min)?;
    let rows: Vec<_> = table
        .rows()
        .iter()
        .filter(|r| r.q >= ctx.q_min)
        .collect();

    eprintln!(
        "fit over q = {}..={}: c0 = {}, c1 = {}, c2 = {}",
        fit.q_min,
        fit.q_max,
        f17(fit.c0),
        f17(fit.c1),
        f17(fit.c2)
    );
    eprintln!("normalization constant kappa = {}", f17(fit.kappa));

    let fit_json = {
        let mut o = JsonObj::report();
        o.int("q_min", fit.q_min)
            .int("q_max", fit.q_max)
            .num("c0", fit.c0)
            .num("c1", fit.c1)
            .num("c2", fit.c2)
            .num("kappa", fit.kappa)
            .num("a1_reference", fit.a1_reference)
            .num("a2_reference", fit.a2_reference)
            .num("fit_residual", fit.residual);
        o
    };

    match ctx.format {
        Format::Csv => {
            let lines: Vec<String> = rows
                .iter()
                .map(|r| format!("{},{},{}", r.q, f17(r.action), f17(r.residual)))
                .collect();
            write_artifact(ctx.out.as_deref(), &csv("q,action,residual", &lines))?;
            // the fit travels as a JSON sidecar next to the CSV table
            if let Some(out) = &ctx.out {
                let side = out.with_extension("fit.json");
                write_artifact(Some(&side), &fit_json.finish())?;
            }
            Ok(())
        }
        Format::Json => {
            let items: Vec<String> = rows
                .iter()
                .map(|r| {
                    let mut e = JsonObj::new();
                    e.int("q", r.q).num("action", r.action).num("residual", r.residual);
                    e.inline()
                })
                .collect();
            let mut o = fit_json;
            o.raw("rows", &obj_array(&items));
            write_artifact(ctx.out.as_deref(), &o.finish())
        }
    }
}

pub fn xray(ctx: &Ctx, modes: &str) -> Result<(), Failure> {
    require_orbit_range(ctx)?;
    if !(ctx.gamma.is_finite() && ctx.gamma > 0.0) {
        return Err(Failure::invalid("gamma must be positive"));
    }
    let mut parsed = Vec::new();
    for part in modes.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let p: usize = part
            .parse()
            .map_err(|_| Failure::invalid(format!("bad mode index {part:?}")))?;
        if p > 4096 {
            return Err(Failure::invalid(format!("mode index {p} too large")));
        }
        parsed.push(p);
    }
    if parsed.is_empty() {
        return Err(Failure::invalid("no mode indices given"));
    }

    let curve = load_curve(ctx)?;
    let maps: Vec<EvenFourierMap> = parsed
        .iter()
        .map(|&p| EvenFourierMap::mode(p, ctx.gamma))
        .collect();
    let computed: Vec<_> = (ctx.q_min..=ctx.q_max)
        .into_par_iter()
        .map(|q| {
            max_area_orbit(&curve, q).map(|orbit| {
                let values: Vec<f64> = maps
                    .iter()
                    .map(|n| xray_transform(&curve, &orbit, n))
                    .collect();
                (q, values)
            })
        })
        .collect();
    let mut rows = Vec::with_capacity(computed.len());
    for r in computed {
        rows.push(r?);
    }

    eprintln!(
        "transform profiles for modes {parsed:?} over q = {}..={}",
        ctx.q_min, ctx.q_max
    );

    let content = match ctx.format {
        Format::Csv => {
            let header = std::iter::once("q".to_string())
                .chain(parsed.iter().map(|p| format!("mode_{p}")))
                .collect::<Vec<_>>()
                .join(",");
            let lines: Vec<String> = rows
                .iter()
                .map(|(q, vs)| {
                    std::iter::once(q.to_string())
                        .chain(vs.iter().map(|&v| f17(v)))
                        .collect::<Vec<_>>()
                        .join(",")
                })
                .collect();
            csv(&header, &lines)
        }
        Format::Json => {
            let items: Vec<String> = rows
                .iter()
                .map(|(q, vs)| {
                    let mut e = JsonObj::new();
                    e.int("q", *q).raw("values", &num_array(vs));
                    e.inline()
                })
                .collect();
            let mut o = JsonObj::report();
            o.num("gamma", ctx.gamma)
                .raw("modes", &int_array(&parsed))
                .raw("rows", &obj_array(&items));
            o.finish()
        }
    };
    write_artifact(ctx.out.as_deref(), &content)
}

pub fn operator(ctx: &Ctx, q0: Option<usize>) -> Result<(), Failure> {
    require_gamma_window(ctx.gamma)?;
    let curve = load_curve(ctx)?;
    let op = TruncatedIsospectralOperator::from_domain(&curve, ctx.q_max, ctx.q_max, ctx.gamma)?;
    let report = kernel_analysis(&op);
    let kind = match op.kind() {
        OperatorKind::EllipseClosedForm => "ellipse-closed-form",
        OperatorKind::DomainNumerical => "domain-numerical",
    };
    let split = match q0 {
        Some(q0) => Some(finite_rank_split(&op, q0)?),
        None => None,
    };

    eprintln!(
        "{kind} truncation at q_max = {}: sigma_min {:.6}, sigma_max {:.6}, kernel dim {}",
        ctx.q_max, report.sigma_min, report.sigma_max, report.kernel_dim
    );
    if let Some(s) = &split {
        eprintln!(
            "split at q0 = {}: kernel bound {}, reduced sigma_min {:.6}",
            s.q0, s.kernel_dim_bound, s.reduced_sigma_min
        );
    }

    let content = match ctx.format {
        Format::Csv => {
            let m = op.matrix();
            let mut lines = Vec::with_capacity(m.nrows() * m.ncols());
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    lines.push(format!("{r},{c},{}", f17(m[(r, c)])));
                }
            }
            csv("row,col,value", &lines)
        }
        Format::Json => {
            let mut o = JsonObj::report();
            o.num("gamma", ctx.gamma)
                .int("q_max", ctx.q_max)
                .str("kind", kind)
                .num("sigma_min", report.sigma_min)
                .num("sigma_max", report.sigma_max)
                .int("kernel_dim", report.kernel_dim);
            match &split {
                Some(s) => {
                    let mut e = JsonObj::new();
                    e.int("q0", s.q0)
                        .int("kernel_dim_bound", s.kernel_dim_bound)
                        .int("kernel_dim", s.kernel_dim)
                        .num("tail_sigma_ratio", s.tail_sigma_ratio)
                        .num("reduced_sigma_min", s.reduced_sigma_min)
                        .num("reduced_sigma_max", s.reduced_sigma_max);
                    o.raw("split", &e.inline());
                }
                None => {
                    o.raw("split", "null");
                }
            }
            o.finish()
        }
    };
    write_artifact(ctx.out.as_deref(), &content)
}

pub fn deform(ctx: &Ctx, tau: f64, h: f64) -> Result<(), Failure> {
    if !(ctx.gamma.is_finite() && ctx.gamma > 0.0) {
        return Err(Failure::invalid("gamma must be positive"));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Failure::invalid("step h must be positive"));
    }
    if !tau.is_finite() {
        return Err(Failure::invalid("tau must be finite"));
    }
    if ctx.q_max < 3 {
        return Err(Failure::invalid("deformation sampling needs q_max >= 3"));
    }
    let family = {
        let text = read_spec(&ctx.spec)?;
        let mut f = DeformationFamily::from_json(&text)?;
        if let Some(g) = ctx.grid {
            f.base.grid_size = g;
            f.validate()?;
        }
        f
    };
    let sample = sample_family(&family, tau, ctx.q_max, h, ctx.gamma)?;
    let resid = isospectral_residuals(&family, tau, ctx.q_max, h, ctx.gamma)?;

    let rows: Vec<(usize, f64, f64)> = sample
        .derivatives
        .iter()
        .zip(&sample.xray)
        .map(|(&(q, fd), &(_, xr))| (q, fd, xr))
        .collect();
    let worst = rows
        .iter()
        .map(|&(_, fd, xr)| (fd - xr).abs())
        .fold(0.0f64, f64::max);

    eprintln!(
        "tau = {tau}: derivative vs transform agree to {worst:.3e} over q = 3..={}",
        ctx.q_max
    );
    let worst_xray = resid
        .xray
        .iter()
        .map(|&(_, v)| v.abs())
        .fold(0.0f64, f64::max);
    eprintln!(
        "isospectral residuals: mean {:.3e}, alpha1 {:.3e}, transform {:.3e}, perimeter shift {:.3e} -> {}",
        resid.mean_coeff,
        resid.alpha1,
        worst_xray,
        resid.perimeter_shift,
        if resid.consistent { "consistent" } else { "not consistent" }
    );

    let content = match ctx.format {
        Format::Csv => {
            let lines: Vec<String> = rows
                .iter()
                .map(|&(q, fd, xr)| {
                    format!("{q},{},{},{}", f17(fd), f17(xr), f17(fd - xr))
                })
                .collect();
            csv("q,finite_difference,transform,difference", &lines)
        }
        Format::Json => {
            let items: Vec<String> = rows
                .iter()
                .map(|&(q, fd, xr)| {
                    let mut e = JsonObj::new();
                    e.int("q", q)
                        .num("finite_difference", fd)
                        .num("transform", xr)
                        .num("difference", fd - xr);
                    e.inline()
                })
                .collect();
            let residuals = {
                let mut e = JsonObj::new();
                e.num("mean_coeff", resid.mean_coeff)
                    .num("alpha1", resid.alpha1)
                    .num("alpha2", resid.alpha2)
                    .num("xray", worst_xray)
                    .num("perimeter_shift", resid.perimeter_shift)
                    .bool("consistent", resid.consistent);
                e.inline()
            };
            let mut o = JsonObj::report();
            o.num("tau", tau)
                .num("h", h)
                .num("gamma", ctx.gamma)
                .num("evenness", sample.evenness)
                .raw("map_coeffs", &num_array(sample.map.coeffs()))
                .raw("residuals", &residuals)
                .raw("rows", &obj_array(&items));
            o.finish()
        }
    };
    write_artifact(ctx.out.as_deref(), &content)
}

pub fn run_verify(ctx: &Ctx, only: Option<&str>) -> Result<i32, Failure> {
    require_gamma_window(ctx.gamma)?;
    let ids: Vec<usize> = match only {
        None => (1..=verify::CRITERION_NAMES.len()).collect(),
        Some(sel) => {
            let mut ids = Vec::new();
            for part in sel.split(',') {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                if let Ok(id) = part.parse::<usize>() {
                    if (1..=verify::CRITERION_NAMES.len()).contains(&id) {
                        ids.push(id);
                        continue;
                    }
                    return Err(Failure::invalid(format!("no criterion {id}")));
                }
                match verify::CRITERION_NAMES.iter().position(|n| *n == part) {
                    Some(i) => ids.push(i + 1),
                    None => {
                        return Err(Failure::invalid(format!("no criterion named {part:?}")))
                    }
                }
            }
            if ids.is_empty() {
                return Err(Failure::invalid("empty criterion selection"));
            }
            ids
        }
    };

    let results: Vec<_> = ids
        .iter()
        .map(|&id| verify::run_criterion(id, ctx.grid))
        .collect();
    for r in &results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2} {:<28} {}", r.id, r.name, r.detail);
    }
    let failed: Vec<usize> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();

    if let Some(out) = &ctx.out {
        let content = match ctx.format {
            Format::Csv => {
                let lines: Vec<String> = results
                    .iter()
                    .map(|r| {
                        format!(
                            "{},{},{},{}",
                            r.id,
                            r.name,
                            r.passed,
                            csv_field(&r.detail)
                        )
                    })
                    .collect();
                csv("id,name,passed,detail", &lines)
            }
            Format::Json => {
                let items: Vec<String> = results
                    .iter()
                    .map(|r| {
                        let mut e = JsonObj::new();
                        e.int("id", r.id)
                            .str("name", r.name)
                            .bool("passed", r.passed)
                            .str("detail", &r.detail);
                        e.inline()
                    })
                    .collect();
                let mut o = JsonObj::report();
                o.bool("passed", failed.is_empty())
                    .raw("criteria", &obj_array(&items));
                o.finish()
            }
        };
        write_artifact(Some(out), &content)?;
    }

    if failed.is_empty() {
        Ok(0)
    } else {
        eprintln!("criteria failed: {failed:?}");
        Ok(1)
    }
}
