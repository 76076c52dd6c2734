use std::path::Path;
use std::process::{Command, Output};

use polymet::parse_report;

fn polymet(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polymet")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn config_errors_exit_two_with_line_and_key() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("suite = cone\nseed = 1\ncolour = red\n", "line 3", "colour"),
        ("suite = gauge\nseed = 1\n[tolerances]\nadjoint = 0\n", "line 4", "adjoint"),
        ("suite = gauge\n", "seed", "randomized"),
        ("suite = nonsense\n", "nonsense", "unknown suite"),
        ("suite = cone\nseed = 1\n[chart]\nresolution = 15\n", "resolution", "even"),
    ];
    for (i, (text, a, b)) in cases.iter().enumerate() {
        let p = dir.path().join(format!("c{i}.cfg"));
        std::fs::write(&p, text).unwrap();
        let o = polymet(&["run", "--config", p.to_str().unwrap()], dir.path());
        assert_eq!(o.status.code(), Some(2), "{text}");
        let e = stderr(&o);
        assert!(e.contains(a) && e.contains(b), "{text} -> {e}");
    }
}

#[test]
fn flags_go_through_the_same_validation() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(polymet(&["cone"], dir.path()).status.code(), Some(2));
    assert_eq!(polymet(&["geodesic", "--tol", "drift_rate=-1"], dir.path()).status.code(), Some(2));
    assert_eq!(polymet(&["geodesic", "--tol", "no_such=1"], dir.path()).status.code(), Some(2));
}

#[test]
fn suite_report_formats_and_rerun_from_echo() {
    let dir = tempfile::tempdir().unwrap();
    let o = polymet(&["geodesic", "--out", "g.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = parse_report(&std::fs::read_to_string(dir.path().join("g.json")).unwrap()).unwrap();
    assert!(report.overall_pass);

    let csv = polymet(&["report", "--in", "g.json", "--format", "csv"], dir.path());
    let rows = String::from_utf8(csv.stdout).unwrap();
    assert_eq!(rows.lines().count(), report.checks.len() + 1);

    let text = polymet(&["report", "--in", "g.json", "--format", "text"], dir.path());
    assert!(String::from_utf8(text.stdout).unwrap().contains("overall: PASS"));

    // The embedded config echo reproduces the run.
    std::fs::write(dir.path().join("echo.cfg"), &report.provenance.config).unwrap();
    let o = polymet(&["run", "--config", "echo.cfg", "--out", "again.json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let again = parse_report(&std::fs::read_to_string(dir.path().join("again.json")).unwrap()).unwrap();
    assert_eq!(again.checks, report.checks);
    assert_eq!(again.provenance, report.provenance);
}

#[test]
fn failing_checks_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    // A tolerance far below the integrator's error forces a failure.
    let o = polymet(&["geodesic", "--tol", "sphere_distance=1e-300", "--out", "f.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let report = parse_report(&std::fs::read_to_string(dir.path().join("f.json")).unwrap()).unwrap();
    assert!(!report.overall_pass);
    assert_eq!(report.failed().map(|c| c.name.as_str()).collect::<Vec<_>>(), ["geodesic.sphere_distance"]);
}

#[test]
fn generate_validate_and_analyse_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = |args: &[&str]| {
        let o = polymet(args, d);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
        String::from_utf8(o.stdout).unwrap()
    };
    ok(&["generate", "metric", "--model", "bumpy-torus", "--resolution", "16", "--out", "g.pmp"]);
    ok(&["generate", "metric", "--model", "flat-torus", "--model", "lorentz-torus", "--resolution", "16", "--out", "p.pmp"]);
    ok(&["generate", "tensor", "--model", "random-symmetric", "--like", "g.pmp", "--seed", "3", "--out", "h.pmf"]);
    assert_eq!(polymet(&["generate", "tensor", "--model", "random-vector", "--out", "x.pmf"], d).status.code(), Some(2));

    let v: serde_json::Value = serde_json::from_str(&ok(&["cone", "validate", "--metric", "p.pmp"])).unwrap();
    assert_eq!(v["valid"], true);
    assert_eq!(v["inertias"][1], "(1,1)");

    let v: serde_json::Value = serde_json::from_str(&ok(&["curvature", "--metric", "g.pmp"])).unwrap();
    assert!(v["max_symmetry_residual"].as_f64().unwrap() < 1e-6);

    let v: serde_json::Value = serde_json::from_str(&ok(&["gauge", "slice", "--metric", "g.pmp", "--tensor", "h.pmf"])).unwrap();
    assert!(v["residual"].as_f64().unwrap() < 1e-6);

    let csv = ok(&["geodesic", "--metric", "g.pmp", "--x", "1,1", "--v", "1,0", "--t", "0.5", "--dt", "0.01", "--every", "5"]);
    assert!(csv.starts_with("t,x0,x1,v0,v1,speed\n"));
    assert_eq!(csv.lines().count(), 1 + 11);

    let v: serde_json::Value = serde_json::from_str(&ok(&["chern", "gauss-bonnet", "--metric", "g.pmp"])).unwrap();
    assert_eq!(v["euler_characteristic"], 0.0);

    std::fs::write(d.join("fam.txt"), "base = g.pmp\nperturbation = h.pmf\nparameters = 0, 0.1\n").unwrap();
    let v: serde_json::Value = serde_json::from_str(&ok(&["index", "family", "--spec", "fam.txt"])).unwrap();
    assert_eq!(v["members"][1]["betti"], serde_json::json!([1, 2, 1]));

    let v: serde_json::Value = serde_json::from_str(&ok(&["index", "callias", "--potential", "minus-tanh", "--N", "400"])).unwrap();
    assert_eq!(v["report"]["index"], -1);

    let v: serde_json::Value =
        serde_json::from_str(&ok(&["scales", "qi", "--g0", "g.pmp", "--g1", "g.pmp", "--pairs", "20", "--seed", "1"])).unwrap();
    assert_eq!(v["C"], 1.0);
    assert_eq!(polymet(&["scales", "qi", "--g0", "g.pmp", "--g1", "g.pmp"], d).status.code(), Some(2));

    // Missing inputs are I/O errors.
    assert_eq!(polymet(&["cone", "validate", "--metric", "missing.pmp"], d).status.code(), Some(2));
}
