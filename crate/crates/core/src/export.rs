//! CSV and JSON artifacts of a run, and parsers for reading them back.
//!
//! Agents and nodes are numbered from 1 in every file.

use std::fmt::Write as _;

use crate::bounds::BoundSet;
use crate::config::{ModeKind, ScenarioConfig};
use crate::error::{Error, Result};
use crate::sim::{Trace, TraceSample};
use crate::single::TriggerRecord;
use crate::Vector;

/// Default significant digits of every number written.
pub const DEFAULT_PRECISION: usize = 12;
/// Environment variable overriding [`DEFAULT_PRECISION`].
pub const PRECISION_ENV: &str = "TETHER_PRECISION";

/// Precision from `TETHER_PRECISION`, falling back to the default.
pub fn precision_from_env() -> Result<usize> {
    match std::env::var(PRECISION_ENV) {
        Err(_) => Ok(DEFAULT_PRECISION),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(p) if (1..=17).contains(&p) => Ok(p),
            _ => Err(Error::Parameter(format!("{PRECISION_ENV}={s:?} must be an integer in 1..=17"))),
        },
    }
}

/// Fixed-point decimal with `sig` significant digits.
pub fn format_fixed(v: f64, sig: usize) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i64;
    let decimals = (sig as i64 - 1 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // rounding may carry into a new leading digit; one fewer decimal then suffices
    let digits = s.chars().filter(|c| c.is_ascii_digit()).collect::<String>();
    if decimals > 0 && digits.trim_start_matches('0').len() > sig {
        format!("{v:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

fn push_row(out: &mut String, cells: impl IntoIterator<Item = String>) {
    let mut first = true;
    for c in cells {
        if !first {
            out.push(',');
        }
        out.push_str(&c);
        first = false;
    }
    out.push('\n');
}

pub fn trace_header(config: &ScenarioConfig) -> Vec<String> {
    let (n, p) = (config.n(), config.dim());
    let mut h = vec!["t".to_string()];
    for i in 1..=n {
        h.extend((1..=p).map(|c| format!("x{i}_{c}")));
    }
    if config.kind() == ModeKind::Double {
        for i in 1..=n {
            h.extend((1..=p).map(|c| format!("q{i}_{c}")));
        }
    }
    let edges = config.formation.graph().edges();
    h.extend(edges.iter().map(|&(i, j)| format!("dist_{}_{}", i + 1, j + 1)));
    h.extend(edges.iter().map(|&(i, j)| format!("dev_{}_{}", i + 1, j + 1)));
    h.extend((1..=n).map(|i| format!("err_{i}")));
    h.push("threshold".into());
    h
}

/// `t`, positions, velocities (double mode), edge lengths, then edge
/// deviations `|x_i - x_j - d_ij|`, per-agent error norms and the threshold.
pub fn trace_csv(trace: &Trace, config: &ScenarioConfig, sig: usize) -> String {
    let spec = &config.formation;
    let mut out = String::new();
    push_row(&mut out, trace_header(config));
    let f = |v: f64| format_fixed(v, sig);
    for s in &trace.samples {
        let mut row = vec![f(s.t)];
        row.extend(s.x.iter().flat_map(|x| x.iter().copied()).map(f));
        if let Some(q) = &s.q {
            row.extend(q.iter().flat_map(|x| x.iter().copied()).map(f));
        }
        row.extend(s.edge_lengths(spec.graph()).into_iter().map(f));
        row.extend((0..spec.graph().m()).map(|k| f(spec.edge_deviation(k, &s.x).norm())));
        if s.error_norms.len() == config.n() {
            row.extend(s.error_norms.iter().copied().map(f));
        } else {
            row.extend((0..config.n()).map(|_| "nan".to_string()));
        }
        row.push(f(s.threshold));
        push_row(&mut out, row);
    }
    out
}

/// `agent, t, u_1..u_p, err_norm`, plus `q_1..q_p` in double mode.
/// The control is `u_i` or the event part `u^d_i`.
pub fn triggers_csv(triggers: &[TriggerRecord], config: &ScenarioConfig, sig: usize) -> String {
    let p = config.dim();
    let double = config.kind() == ModeKind::Double;
    let mut out = String::new();
    let mut h = vec!["agent".to_string(), "t".to_string()];
    h.extend((1..=p).map(|c| format!("u_{c}")));
    h.push("err_norm".into());
    if double {
        h.extend((1..=p).map(|c| format!("q_{c}")));
    }
    push_row(&mut out, h);
    let mut sorted: Vec<&TriggerRecord> = triggers.iter().collect();
    sorted.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.agent.cmp(&b.agent)));
    let f = |v: f64| format_fixed(v, sig);
    for r in sorted {
        let mut row = vec![(r.agent + 1).to_string(), f(r.time)];
        row.extend(r.control.iter().copied().map(f));
        row.push(f(r.error_norm));
        if double {
            match &r.velocity {
                Some(q) => row.extend(q.iter().copied().map(f)),
                None => row.extend((0..p).map(|_| "nan".to_string())),
            }
        }
        push_row(&mut out, row);
    }
    out
}

/// One polyline per agent: `t, x_1..x_p`.
pub fn trajectory_csv(trace: &Trace, agent: usize, sig: usize) -> String {
    let p = trace.samples.first().map_or(0, |s| s.x[agent].len());
    let mut out = String::new();
    let mut h = vec!["t".to_string()];
    h.extend((1..=p).map(|c| format!("x_{c}")));
    push_row(&mut out, h);
    for s in &trace.samples {
        let mut row = vec![format_fixed(s.t, sig)];
        row.extend(s.x[agent].iter().map(|&v| format_fixed(v, sig)));
        push_row(&mut out, row);
    }
    out
}

/// Trigger raster: `agent, t`, grouped by agent.
pub fn raster_csv(triggers: &[TriggerRecord], sig: usize) -> String {
    let mut sorted: Vec<&TriggerRecord> = triggers.iter().collect();
    sorted.sort_by(|a, b| a.agent.cmp(&b.agent).then(a.time.total_cmp(&b.time)));
    let mut out = String::from("agent,t\n");
    for r in sorted {
        let _ = writeln!(out, "{},{}", r.agent + 1, format_fixed(r.time, sig));
    }
    out
}

/// Everything `bounds` prints: beta0 data, gains (double mode) and the bound set.
pub fn bounds_json(config: &ScenarioConfig, bounds: &BoundSet) -> serde_json::Value {
    serde_json::json!({
        "mode": config.kind(),
        "beta0_choice": config.beta0_choice,
        "beta0": config.beta0,
        "selected_beta0": config.selected_beta0(),
        "gains": config.mode.gains(),
        "bounds": bounds,
    })
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn parse(text: &str, what: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Trace(format!("{what}: empty file")))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (ln, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Trace(format!("{what}: row {}: {e}", ln + 1)))?;
            if row.len() != header.len() {
                return Err(Error::Trace(format!(
                    "{what}: row {} has {} cells, header has {}",
                    ln + 1,
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        Ok(Table { header, rows })
    }

    fn col(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn need(&self, name: &str, what: &str) -> Result<usize> {
        self.col(name)
            .ok_or_else(|| Error::Trace(format!("{what}: missing column {name}")))
    }
}

/// Reads a trace written by [`trace_csv`] for the given scenario.
pub fn parse_trace_csv(text: &str, config: &ScenarioConfig) -> Result<Trace> {
    let table = Table::parse(text, "trace")?;
    let (n, p) = (config.n(), config.dim());
    let double = config.kind() == ModeKind::Double;
    let has_q = table.col("q1_1").is_some();
    if has_q != double {
        return Err(Error::Trace(format!(
            "trace {} velocity columns but the scenario is {}",
            if has_q { "has" } else { "lacks" },
            config.kind()
        )));
    }
    let x_cols: Vec<Vec<usize>> = (1..=n)
        .map(|i| (1..=p).map(|c| table.need(&format!("x{i}_{c}"), "trace")).collect())
        .collect::<Result<_>>()?;
    if table.col(&format!("x{}_1", n + 1)).is_some() || table.col(&format!("x1_{}", p + 1)).is_some() {
        return Err(Error::Trace(format!("trace has more than {n} agents of dimension {p}")));
    }
    let q_cols: Option<Vec<Vec<usize>>> = if double {
        Some(
            (1..=n)
                .map(|i| (1..=p).map(|c| table.need(&format!("q{i}_{c}"), "trace")).collect())
                .collect::<Result<_>>()?,
        )
    } else {
        None
    };
    let t_col = table.need("t", "trace")?;
    let err_cols: Option<Vec<usize>> = (1..=n).map(|i| table.col(&format!("err_{i}"))).collect();
    let thr_col = table.col("threshold");
    let vec_at = |row: &[f64], cols: &[usize]| Vector::from_iterator(cols.len(), cols.iter().map(|&c| row[c]));
    let samples = table
        .rows
        .iter()
        .map(|row| TraceSample {
            t: row[t_col],
            x: x_cols.iter().map(|c| vec_at(row, c)).collect(),
            q: q_cols.as_ref().map(|qc| qc.iter().map(|c| vec_at(row, c)).collect()),
            error_norms: err_cols
                .as_ref()
                .map(|c| c.iter().map(|&k| row[k]).collect())
                .unwrap_or_default(),
            threshold: thr_col.map_or(f64::NAN, |c| row[c]),
        })
        .collect();
    Ok(Trace {
        kind: config.kind(),
        samples,
    })
}

/// Reads a trigger log written by [`triggers_csv`]. Sensed payloads are not
/// stored in the file and come back empty.
pub fn parse_triggers_csv(text: &str, config: &ScenarioConfig) -> Result<Vec<TriggerRecord>> {
    let table = Table::parse(text, "triggers")?;
    let (n, p) = (config.n(), config.dim());
    let agent_col = table.need("agent", "triggers")?;
    let t_col = table.need("t", "triggers")?;
    let u_cols: Vec<usize> = (1..=p)
        .map(|c| table.need(&format!("u_{c}"), "triggers"))
        .collect::<Result<_>>()?;
    if table.col(&format!("u_{}", p + 1)).is_some() {
        return Err(Error::Trace(format!("triggers: controls have more than {p} components")));
    }
    let err_col = table.col("err_norm");
    let q_cols: Option<Vec<usize>> = (1..=p).map(|c| table.col(&format!("q_{c}"))).collect();
    table
        .rows
        .iter()
        .enumerate()
        .map(|(ln, row)| {
            let a = row[agent_col];
            if !(a >= 1.0 && a <= n as f64 && a.fract() == 0.0) {
                return Err(Error::Trace(format!("triggers: row {}: agent {a} out of 1..={n}", ln + 1)));
            }
            Ok(TriggerRecord {
                agent: a as usize - 1,
                time: row[t_col],
                control: Vector::from_iterator(p, u_cols.iter().map(|&c| row[c])),
                error_norm: err_col.map_or(f64::NAN, |c| row[c]),
                payload: Vec::new(),
                payload_q: None,
                velocity: q_cols
                    .as_ref()
                    .map(|qc| Vector::from_iterator(p, qc.iter().map(|&c| row[c]))),
            })
        })
        .collect()
}
