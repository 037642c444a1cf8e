//! End-to-end runs of the sympb binary: artifact shapes, the exit-code
//! contract, and byte-level determinism across thread counts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sympb"))
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn domain_reports_the_circle() {
    let out = bin()
        .args(["domain", "--spec"])
        .arg(bundled("circle.json"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("6.2831853071795862e0"));
    assert!(stderr(&out).contains("conic class: ellipse"));
    let csv = stdout(&out);
    assert!(csv.starts_with("t,x,y,k\n"));
    assert_eq!(csv.lines().count(), 257);
}

#[test]
fn domain_json_carries_the_schema_tag() {
    let out = bin()
        .args(["domain", "--format", "json", "--spec"])
        .arg(bundled("ellipse.json"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["conic"], "ellipse");
    // constant affine curvature up to spectral differentiation noise
    let k_min = doc["k_min"].as_f64().unwrap();
    let k_max = doc["k_max"].as_f64().unwrap();
    assert!((k_max - k_min).abs() < 1e-7);
}

#[test]
fn invalid_specs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"a": -1.0, "b": 1.0}"#).unwrap();
    let out = bin().args(["domain", "--spec"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let nonconvex = dir.path().join("nonconvex.json");
    fs::write(
        &nonconvex,
        r#"{"a": 1.0, "b": 1.0, "perturbation": [{"j": 2, "delta": 2.0}]}"#,
    )
    .unwrap();
    let out = bin().args(["domain", "--spec"]).arg(&nonconvex).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin().args(["domain"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "missing --spec must exit 2");
}

#[test]
fn a_grid_that_cannot_hold_the_ellipse_exits_two() {
    let out = bin()
        .args(["domain", "--grid", "16", "--spec"])
        .arg(bundled("ellipse.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cannot resolve"));
}

#[test]
fn spectrum_fit_matches_the_circle_expansion() {
    let out = bin()
        .args([
            "spectrum", "--q-min", "3", "--q-max", "128", "--grid", "256", "--format", "json",
            "--spec",
        ])
        .arg(bundled("circle.json"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let c0 = doc["c0"].as_f64().unwrap();
    assert!((c0 - 2.0 * std::f64::consts::PI).abs() < 1e-6, "c0 = {c0}");
    assert_eq!(doc["rows"].as_array().unwrap().len(), 126);
}

#[test]
fn spectrum_rejects_a_short_fit_range() {
    let out = bin()
        .args(["spectrum", "--q-min", "16", "--q-max", "32", "--spec"])
        .arg(bundled("circle.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spectrum_csv_writes_the_fit_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("spec.csv");
    let out = bin()
        .args(["spectrum", "--q-min", "3", "--q-max", "16", "--out"])
        .arg(&table)
        .arg("--spec")
        .arg(bundled("circle.json"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(fs::read_to_string(&table).unwrap().starts_with("q,action,residual\n"));
    let side = fs::read_to_string(dir.path().join("spec.fit.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&side).unwrap();
    assert_eq!(doc["schema"], 1);
    assert!(doc["kappa"].as_f64().unwrap() < 0.0);
}

#[test]
fn affine_images_share_their_spectrum() {
    let run = |name: &str| {
        let out = bin()
            .args(["spectrum", "--q-min", "3", "--q-max", "16", "--format", "json", "--spec"])
            .arg(bundled(name))
            .output()
            .unwrap();
        assert!(out.status.success());
        let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        doc["rows"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r["action"].as_f64().unwrap())
            .collect::<Vec<_>>()
    };
    let circle = run("circle.json");
    let ellipse = run("ellipse.json");
    for (a, b) in circle.iter().zip(&ellipse) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn orbit_vertices_close_up() {
    let out = bin()
        .args(["orbit", "--q-min", "3", "--q-max", "8", "--format", "json", "--spec"])
        .arg(bundled("perturbed.json"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let orbits = doc["orbits"].as_array().unwrap();
    assert_eq!(orbits.len(), 6);
    for o in orbits {
        assert!(o["residual"].as_f64().unwrap() < 1e-10);
        let q = o["q"].as_u64().unwrap() as usize;
        assert_eq!(o["params"].as_array().unwrap().len(), q);
    }
}

#[test]
fn xray_sees_the_divisor_structure() {
    let out = bin()
        .args(["xray", "--q-min", "3", "--q-max", "9", "--modes", "0,6", "--format", "json", "--spec"])
        .arg(bundled("ellipse.json"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for row in doc["rows"].as_array().unwrap() {
        let q = row["q"].as_u64().unwrap() as usize;
        let v = row["values"].as_array().unwrap()[1].as_f64().unwrap();
        if 6 % q == 0 {
            assert!(v.abs() > 0.5, "q = {q} divides 6, row {v}");
        } else {
            assert!(v.abs() < 1e-8, "q = {q} misses mode 6, row {v}");
        }
    }
}

#[test]
fn operator_split_and_gamma_window() {
    let out = bin()
        .args(["operator", "--q-max", "16", "--q0", "4", "--format", "json", "--spec"])
        .arg(bundled("perturbed.json"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(doc["sigma_min"].as_f64().unwrap() > 0.1);
    assert_eq!(doc["split"]["kernel_dim_bound"], 5);

    for gamma in ["2.5", "4.0", "5"] {
        let out = bin()
            .args(["operator", "--gamma", gamma, "--spec"])
            .arg(bundled("circle.json"))
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(2), "gamma = {gamma} must be rejected");
    }
}

#[test]
fn deform_reports_the_bump_discriminator() {
    let out = bin()
        .args([
            "deform", "--tau", "0", "--h", "1e-3", "--q-max", "6", "--format", "json", "--spec",
        ])
        .arg(bundled("bump-family.json"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["residuals"]["consistent"], false);
    // the four-bump excites q = 4 and stays invisible at q = 5
    let rows = doc["rows"].as_array().unwrap();
    let at = |q: u64| {
        rows.iter()
            .find(|r| r["q"].as_u64() == Some(q))
            .map(|r| r["transform"].as_f64().unwrap())
            .unwrap()
    };
    assert!(at(4).abs() > 0.1);
    assert!(at(5).abs() < 1e-8);
}

#[test]
fn affine_families_stay_isospectral() {
    let out = bin()
        .args([
            "deform", "--tau", "0.05", "--h", "1e-4", "--q-max", "6", "--format", "json", "--spec",
        ])
        .arg(bundled("squeeze-family.json"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["residuals"]["consistent"], true);
    for row in doc["rows"].as_array().unwrap() {
        assert!(row["transform"].as_f64().unwrap().abs() < 1e-8);
        assert!(row["finite_difference"].as_f64().unwrap().abs() < 1e-8);
    }
}

#[test]
fn verify_subset_passes_and_bad_gamma_is_rejected() {
    let out = bin().args(["verify", "--only", "mobius-inversion"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("[PASS] 10 mobius-inversion"));

    let out = bin().args(["verify", "--gamma", "5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin().args(["verify", "--only", "no-such-criterion"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_fails_honestly_on_a_coarse_grid() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("verify.json");
    let out = bin()
        .args(["verify", "--only", "5", "--grid", "64", "--format", "json", "--out"])
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("[FAIL]"));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["passed"], false);
    assert_eq!(doc["criteria"][0]["id"], 5);
}

#[test]
fn artifacts_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let path = dir.path().join(name);
        let out = bin()
            .env("SYMPB_THREADS", threads)
            .args(["spectrum", "--q-min", "4", "--q-max", "32", "--format", "json", "--out"])
            .arg(&path)
            .arg("--spec")
            .arg(bundled("perturbed.json"))
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        fs::read(&path).unwrap()
    };
    let one = run("1", "one.json");
    let many = run("6", "many.json");
    let again = run("6", "again.json");
    assert_eq!(one, many);
    assert_eq!(many, again);
}

#[test]
fn bad_thread_env_exits_two() {
    let out = bin()
        .env("SYMPB_THREADS", "zero")
        .args(["domain", "--spec"])
        .arg(bundled("circle.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
