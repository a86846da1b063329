//! Subcommands of the `tether` binary, returning process exit codes.

use std::io::Write;
use std::path::Path;

use tether_core::export::{
    bounds_json, parse_trace_csv, parse_triggers_csv, precision_from_env, raster_csv, trace_csv, trajectory_csv,
    triggers_csv,
};
use tether_core::{compute_bounds, load_scenario, replay_check, run, Error, Report, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Horizon mismatch allowed between a trace and its scenario.
const HORIZON_TOL: f64 = 1e-9;

/// Maps an error to its exit code: bad input is 2, anything failing after
/// validation is 3.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Run { .. }
        | Error::RootFinding { .. }
        | Error::MarginViolation { .. }
        | Error::StaleKnowledge { .. }
        | Error::NoPositiveEigenvalue => EXIT_RUNTIME,
        _ => EXIT_INVALID,
    }
}

fn fail(err: &mut dyn Write, e: &Error, code: i32) -> i32 {
    let _ = writeln!(err, "error: {e}");
    code
}

fn print_report(out: &mut dyn Write, report: &Report) {
    for c in &report.checks {
        let margin = c.worst_margin.map_or("-".to_string(), |m| format!("{m:.6e}"));
        let _ = writeln!(
            out,
            "{:<22} {}  worst margin {margin}  {}",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail
        );
    }
    let _ = writeln!(out, "all checks passed: {}", report.all_passed);
}

fn load(path: &Path, err: &mut dyn Write) -> Result<ScenarioConfig, i32> {
    load_scenario(path).map_err(|e| fail(err, &e, EXIT_INVALID))
}

/// Runs the scenario and writes every artifact into `out_dir`. The exit code
/// reflects whether the run completed; certification results go to
/// `report.json`.
pub fn cmd_run(scenario: &Path, out_dir: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let sig = match precision_from_env() {
        Ok(s) => s,
        Err(e) => return fail(err, &e, EXIT_INVALID),
    };
    let config = match load(scenario, err) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let output = match run(&config) {
        Ok(o) => o,
        Err(e) => {
            let e = e.one_based();
            return fail(err, &e, exit_code(&e));
        }
    };
    let mut files: Vec<(String, String)> = vec![
        ("trace.csv".into(), trace_csv(&output.trace, &config, sig)),
        ("triggers.csv".into(), triggers_csv(&output.triggers, &config, sig)),
        (
            "bounds.json".into(),
            serde_json::to_string_pretty(&bounds_json(&config, &output.bounds)).expect("serializable"),
        ),
        (
            "report.json".into(),
            serde_json::to_string_pretty(&output.report).expect("serializable"),
        ),
        ("trigger_raster.csv".into(), raster_csv(&output.triggers, sig)),
    ];
    for i in 0..config.n() {
        files.push((format!("traj_agent_{}.csv", i + 1), trajectory_csv(&output.trace, i, sig)));
    }
    let written = std::fs::create_dir_all(out_dir)
        .and_then(|_| files.iter().try_for_each(|(name, body)| std::fs::write(out_dir.join(name), body)));
    if let Err(e) = written {
        return fail(err, &Error::Io(format!("{}: {e}", out_dir.display())), EXIT_RUNTIME);
    }
    let _ = writeln!(
        out,
        "{} run: {} samples, {} triggers, written to {}",
        config.kind(),
        output.trace.samples.len(),
        output.triggers.len(),
        out_dir.display()
    );
    print_report(out, &output.report);
    EXIT_OK
}

/// Re-certifies a recorded trace and trigger log against a scenario.
pub fn cmd_verify(
    trace_path: &Path,
    triggers_path: &Path,
    scenario: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let config = match load(scenario, err) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())));
    let parsed = read(trace_path)
        .and_then(|t| parse_trace_csv(&t, &config))
        .and_then(|trace| Ok((trace, parse_triggers_csv(&read(triggers_path)?, &config)?)));
    let (trace, triggers) = match parsed {
        Ok(v) => v,
        Err(e) => return fail(err, &e, EXIT_INVALID),
    };
    if let Some(last) = trace.last() {
        if last.t > config.horizon + HORIZON_TOL {
            let e = Error::Trace(format!(
                "trace ends at t={} beyond the scenario horizon {}",
                last.t, config.horizon
            ));
            return fail(err, &e, EXIT_INVALID);
        }
    } else {
        return fail(err, &Error::Trace("trace has no samples".into()), EXIT_INVALID);
    }
    let report = match replay_check(&trace, &triggers, &config) {
        Ok(r) => r,
        Err(e) => return fail(err, &e, EXIT_INVALID),
    };
    print_report(out, &report);
    if report.all_passed {
        EXIT_OK
    } else {
        let _ = writeln!(err, "failed checks: {}", report.failures().join(", "));
        EXIT_VERIFY_FAILED
    }
}

/// Prints beta0, the gains (double mode) and every bound as JSON.
pub fn cmd_bounds(scenario: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let config = match load(scenario, err) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match compute_bounds(&config) {
        Ok(b) => {
            let _ = writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&bounds_json(&config, &b)).expect("serializable")
            );
            EXIT_OK
        }
        Err(e) => fail(err, &e.one_based(), EXIT_INVALID),
    }
}
