//! Binary-level tests: exit codes, artifacts, config precedence, and the
//! error paths of every subcommand.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_liouville"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn manifest(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("manifest.json")).expect("manifest exists");
    serde_json::from_str(&text).expect("manifest parses")
}

#[test]
fn solve_constant_data_writes_field_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "solve",
        "--m",
        "1",
        "--phi",
        "log(16)",
        "--pi",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let field = std::fs::read_to_string(dir.path().join("field.csv")).unwrap();
    assert!(field.starts_with("t,x,F,phi\n"));
    // default grid 41 x 81 plus header
    assert_eq!(field.lines().count(), 41 * 81 + 1);

    let m = manifest(dir.path());
    assert_eq!(m["passed"], true);
    assert!(m["min_f"].as_f64().unwrap() > 0.99);
    assert!(m["wronskian_drift_chi"].as_f64().unwrap() < 1e-8);
    // timings stay out of the manifest unless requested
    assert!(m.get("timings_ms").is_none());
}

#[test]
fn negative_mass_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "solve",
        "--m",
        "-1",
        "--phi",
        "0",
        "--pi",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("mass must be positive"));
    // failed runs still leave a parseable manifest
    let m = manifest(dir.path());
    assert_eq!(m["passed"], false);
    assert!(m["error"].as_str().unwrap().contains("mass"));
}

#[test]
fn grid_exceeding_chiral_range_names_the_requirement() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "solve",
        "--m",
        "1",
        "--phi",
        "0",
        "--pi",
        "0",
        "--grid",
        "-4:4:11,-8:8:11",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("chiral range"), "stderr: {err}");
    assert!(err.contains("12.25"), "stderr: {err}");
}

#[test]
fn empty_grid_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "solve",
        "--m",
        "1",
        "--phi",
        "0",
        "--pi",
        "0",
        "--grid",
        "0:1:0,-1:1:5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("node counts"), "{}", stderr(&out));
}

#[test]
fn unknown_function_lists_known_symbols() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "solve",
        "--m",
        "1",
        "--phi",
        "sech(x)",
        "--pi",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(
        err.contains("sech") && err.contains("cosh"),
        "stderr: {err}"
    );
}

#[test]
fn config_file_is_applied_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.ini");
    std::fs::write(
        &cfg_path,
        "[data]\nm = 2\nphi = log(16/m^2)\npi = 0\n[grid]\nt = -1:1:11\nx = -2:2:21\n",
    )
    .unwrap();
    let out = run(&[
        "solve",
        "--config",
        cfg_path.to_str().unwrap(),
        "--m",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let m = manifest(dir.path());
    // the flag wins over the file
    assert_eq!(m["config"]["mass"].as_f64().unwrap(), 1.0);
    // the file's grid survives
    assert_eq!(m["config"]["grid"]["nt"].as_u64().unwrap(), 11);
}

#[test]
fn data_file_ingestion_solves() {
    let dir = tempfile::tempdir().unwrap();
    let data_path = dir.path().join("data.csv");
    let mut text = String::from("x,phi,pi\n");
    let c = 16.0f64.ln();
    for i in 0..256 {
        let x = -8.0 + 16.0 * i as f64 / 255.0;
        text.push_str(&format!("{x},{c},0\n"));
    }
    std::fs::write(&data_path, text).unwrap();
    let out = run(&[
        "solve",
        "--m",
        "1",
        "--data-file",
        data_path.to_str().unwrap(),
        "--grid",
        "-1:1:11,-2:2:21",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let m = manifest(dir.path());
    let min_f = m["min_f"].as_f64().unwrap();
    assert!((min_f - 1.0).abs() < 1e-6, "min F {min_f}");
}

#[test]
fn track_two_x_family_yields_one_full_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "track",
        "--chi1",
        "1",
        "--chi2",
        "x",
        "--psi1",
        "1",
        "--psi2",
        "x",
        "--x-scan",
        "-1:1:101",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let curve = std::fs::read_to_string(dir.path().join("curve_0.csv")).unwrap();
    assert!(curve.starts_with("t,x,F,dFdx\n"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("lemma_0.json")).unwrap())
            .unwrap();
    assert_eq!(report["coverage"].as_f64().unwrap(), 1.0);
    assert!(report["max_abs_f"].as_f64().unwrap() <= 1e-8);
    assert!(report["truncation"].is_null());
}

#[test]
fn track_rejects_broken_wronskian_with_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "track",
        "--chi1",
        "2",
        "--chi2",
        "x",
        "--psi1",
        "1",
        "--psi2",
        "x",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(
        err.contains("unit-Wronskian") && err.contains("1e0"),
        "stderr: {err}"
    );
}

#[test]
fn track_smooth_cauchy_family_finds_no_seeds() {
    // corollary: a Cauchy-built solution has no zeros, so the analytic
    // constant-data family (k = 1) scanned on a slice yields no curves
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "track",
        "--chi1",
        "cosh(x)",
        "--chi2",
        "sinh(x)",
        "--psi1",
        "-sinh(x)",
        "--psi2",
        "cosh(x)",
        "--t-range",
        "-2:2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(!dir.path().join("curve_0.csv").exists());
    let m = manifest(dir.path());
    assert_eq!(m["stages"][0]["items"].as_u64().unwrap(), 0);
}

#[test]
fn probe_single_eps_is_trivially_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "probe",
        "--m",
        "1",
        "--phi",
        "log(16)",
        "--pi",
        "0",
        "--eps",
        "1e-2",
        "--grid",
        "-1:1:11,-2:2:21",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let fwd = std::fs::read_to_string(dir.path().join("probe_forward.csv")).unwrap();
    assert_eq!(fwd.lines().count(), 2); // header + one row
}

#[test]
fn probe_rejects_non_decreasing_eps() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "probe",
        "--m",
        "1",
        "--phi",
        "0",
        "--pi",
        "0",
        "--eps",
        "1e-3,1e-2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("strictly decreasing"));
}

#[test]
fn verify_constant_data_passes_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "verify",
        "--m",
        "1",
        "--phi",
        "log(16)",
        "--pi",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let checks: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("checks.json")).unwrap())
            .unwrap();
    let list = checks.as_array().unwrap();
    assert_eq!(list.len(), 8);
    for c in list {
        assert_eq!(c["pass"], true, "failed check: {c}");
    }
}

#[test]
fn same_index_pairing_fails_verification_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "verify",
        "--m",
        "1",
        "--phi",
        "log(16)",
        "--pi",
        "0",
        "--pairing",
        "same-index",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "stderr: {}", stderr(&out));
    let checks: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("checks.json")).unwrap())
            .unwrap();
    let residual_check = checks
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "light-cone-residual")
        .unwrap();
    assert_eq!(residual_check["pass"], false);
}

#[test]
fn dump_potentials_emits_unit_values_for_regression_family() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "dump-potentials",
        "--m",
        "2",
        "--phi",
        "log(16/m^2)",
        "--pi",
        "0",
        "--range",
        "-2:2:5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("potentials.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,u,w"));
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let u: f64 = cols[1].parse().unwrap();
        let w: f64 = cols[2].parse().unwrap();
        assert!((u - 1.0).abs() < 1e-12 && (w - 1.0).abs() < 1e-12, "{line}");
    }
}

#[test]
fn dump_chirals_has_the_documented_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "dump-chirals",
        "--m",
        "1",
        "--phi",
        "log(16)",
        "--pi",
        "0",
        "--grid",
        "-1:1:5,-2:2:9",
        "--range",
        "-2:2:17",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("chirals.csv")).unwrap();
    assert!(text.starts_with("s,psi1,psi2,chi1,chi2\n"));
    assert_eq!(text.lines().count(), 18);
}

#[test]
fn timings_flag_adds_timings_to_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "solve",
        "--m",
        "1",
        "--phi",
        "0",
        "--pi",
        "0",
        "--grid",
        "-1:1:5,-2:2:9",
        "--timings",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let m = manifest(dir.path());
    assert!(m["timings_ms"].is_array());
}

#[test]
fn clap_usage_errors_map_to_the_config_exit_code() {
    let out = run(&["solve", "--no-such-flag"]);
    assert_eq!(code(&out), 1);
}
