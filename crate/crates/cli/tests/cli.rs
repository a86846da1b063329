use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use tether_cli::{cmd_bounds, cmd_run, cmd_verify, EXIT_INVALID, EXIT_OK, EXIT_VERIFY_FAILED};

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run_into(cfg: &Path, dir: &Path) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cmd_run(cfg, dir, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn verify(dir: &Path, cfg: &Path) -> (i32, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cmd_verify(&dir.join("trace.csv"), &dir.join("triggers.csv"), cfg, &mut out, &mut err);
    (code, String::from_utf8(err).unwrap())
}

fn write_variant(dir: &Path, base: &str, from: &str, to: &str) -> PathBuf {
    let text = fs::read_to_string(scenario(base)).unwrap();
    assert!(text.contains(from));
    let p = dir.join("variant.cfg");
    fs::write(&p, text.replace(from, to)).unwrap();
    p
}

#[test]
fn run_writes_every_artifact_and_verifies() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, out, _) = run_into(&scenario("scenario_single.cfg"), tmp.path());
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("all checks passed: true"));
    for f in [
        "trace.csv",
        "triggers.csv",
        "bounds.json",
        "report.json",
        "trigger_raster.csv",
        "traj_agent_1.csv",
        "traj_agent_2.csv",
        "traj_agent_3.csv",
    ] {
        assert!(tmp.path().join(f).is_file(), "{f} missing");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["all_passed"], true);
    assert_eq!(verify(tmp.path(), &scenario("scenario_single.cfg")).0, EXIT_OK);
}

#[test]
fn perturbed_trace_fails_verification() {
    let tmp = tempfile::tempdir().unwrap();
    run_into(&scenario("scenario_single.cfg"), tmp.path());
    let trace = fs::read_to_string(tmp.path().join("trace.csv")).unwrap();
    let mut lines: Vec<String> = trace.lines().map(String::from).collect();
    let mut cells: Vec<String> = lines[300].split(',').map(String::from).collect();
    cells[1] = "50".into();
    lines[300] = cells.join(",");
    fs::write(tmp.path().join("trace.csv"), lines.join("\n")).unwrap();
    let (code, err) = verify(tmp.path(), &scenario("scenario_single.cfg"));
    assert_eq!(code, EXIT_VERIFY_FAILED);
    assert!(err.contains("connectivity"), "{err}");
}

#[test]
fn horizon_mismatch_is_a_parse_error() {
    let tmp = tempfile::tempdir().unwrap();
    run_into(&scenario("scenario_single.cfg"), tmp.path());
    let short = write_variant(tmp.path(), "scenario_single.cfg", "horizon = 20.0", "horizon = 10.0");
    assert_eq!(verify(tmp.path(), &short).0, EXIT_INVALID);
}

#[test]
fn beta_above_beta0_is_rejected_with_message() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_variant(tmp.path(), "scenario_single.cfg", "beta = 1.0", "beta = 2.0");
    let (code, _, err) = run_into(&bad, &tmp.path().join("out"));
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("beta=2 violates beta < beta0=1.5"), "{err}");
}

#[test]
fn bounds_reports_beta0_and_gains() {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    assert_eq!(cmd_bounds(&scenario("scenario_double.cfg"), &mut out, &mut err), EXIT_OK);
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v["beta0"]["beta0"], 1.5);
    assert!((v["gains"]["k3"].as_f64().unwrap() - 0.6053).abs() < 1e-3);
    assert_eq!(v["bounds"]["agents"].as_array().unwrap().len(), 3);
}

#[test]
fn bounds_names_the_infeasible_edge() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_variant(tmp.path(), "scenario_single.cfg", "[-2.0, 2.0]]", "[-2.0, 2.5]]");
    let (mut out, mut err) = (Vec::new(), Vec::new());
    assert_eq!(cmd_bounds(&bad, &mut out, &mut err), EXIT_INVALID);
    let err = String::from_utf8(err).unwrap();
    assert!(err.contains("edge (2,3)"), "{err}");
}

#[test]
fn binary_exit_codes_and_precision_override() {
    let tmp = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_tether");
    let status = Command::new(bin)
        .args(["run", scenario("scenario_single.cfg").to_str().unwrap(), "--out"])
        .arg(tmp.path())
        .env("TETHER_PRECISION", "5")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    let trace = fs::read_to_string(tmp.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().nth(1).unwrap().split(',').nth(1).unwrap(), "2.0000");

    let bad = Command::new(bin)
        .args(["run", "/nonexistent.cfg", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));

    let bad_precision = Command::new(bin)
        .args(["run", scenario("scenario_single.cfg").to_str().unwrap(), "--out"])
        .arg(tmp.path().join("bad_precision"))
        .env("TETHER_PRECISION", "abc")
        .output()
        .unwrap();
    assert_eq!(bad_precision.status.code(), Some(2));

    let bounds = Command::new(bin)
        .args(["bounds", scenario("scenario_single.cfg").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(bounds.status.code(), Some(0));

    let fault = write_variant(tmp.path(), "scenario_single.cfg", "[run]", "[tolerances]\nguard_rel = 0.1\n\n[run]");
    let out = Command::new(bin)
        .args(["run", fault.to_str().unwrap(), "--out"])
        .arg(tmp.path().join("fault"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
