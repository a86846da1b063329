//! Closed-form guarantees of the two controllers and trace certification.
//!
//! The constants here bound the tension energy, each edge's length, the
//! Lyapunov decay and the minimum inter-trigger gap. [`certify_trace`]
//! checks a finished run against all of them.

use serde::{Serialize, Serializer};

use crate::config::{Mode, ModeKind, ScenarioConfig};
use crate::double::{DoubleParams, GainSet};
use crate::error::{Error, Result};
use crate::formation::{check_margins, check_feasible, FormationSpec, InitialState, DEFAULT_FEASIBILITY_TOL};
use crate::graph::algebraic_connectivity;
use crate::single::{SingleParams, TriggerRecord};
use crate::sim::{Trace, TraceSample};
use crate::tension::{total_tension_at, TensionParams};
use crate::Vector;

/// Slack allowed on the exponential envelope.
pub const ENVELOPE_SLACK: f64 = 1e-6;
/// Slack allowed on the trigger rule at every sample.
pub const TRIGGER_SLACK: f64 = 1e-6;
/// How close the last sample must be to the horizon.
pub const HORIZON_TOL: f64 = 1e-9;

fn one_based<S: Serializer>(v: &usize, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u64(*v as u64 + 1)
}

fn one_based_pair<S: Serializer>(v: &(usize, usize), s: S) -> std::result::Result<S::Ok, S::Error> {
    [v.0 + 1, v.1 + 1].serialize(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Beta0 {
    /// `rho2 / delta0`.
    pub beta0: f64,
    pub delta0: f64,
    /// `rho2(D D^T)`.
    pub rho2: f64,
    /// `4 / (n (n - 1) delta)`.
    pub conservative: f64,
}

pub fn compute_beta0(spec: &FormationSpec) -> Result<Beta0> {
    if spec.graph().m() == 0 {
        return Err(Error::Parameter("beta0 needs at least one edge".into()));
    }
    let rho2 = algebraic_connectivity(spec.graph())?;
    let delta0 = check_margins(spec).delta0;
    let n = spec.n() as f64;
    Ok(Beta0 {
        beta0: rho2 / delta0,
        delta0,
        rho2,
        conservative: 4.0 / (n * (n - 1.0) * spec.delta()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeBound {
    #[serde(serialize_with = "one_based_pair")]
    pub edge: (usize, usize),
    /// `delta - |d_ij|`.
    pub margin: f64,
    /// Bound on `|y_i - y_j|` (`k_ij` or `k^d_ij`).
    pub length_bound: f64,
    /// `f_ij(length_bound)`, the cap on the edge weight.
    pub weight_cap: f64,
    /// `c^q_ij` (double integrators only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_q: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentBound {
    #[serde(serialize_with = "one_based")]
    pub agent: usize,
    /// `c_i` or `c^d_i`.
    pub c: f64,
    /// Guaranteed minimum inter-trigger gap.
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSet {
    pub mode: ModeKind,
    pub beta0: f64,
    pub delta0: f64,
    pub alpha: f64,
    /// `beta` or `beta_d`.
    pub rate: f64,
    /// Tension energy at t = 0 (`nu` or `nu_d`).
    pub energy0: f64,
    /// `k_nu` or `k^d_nu`.
    pub k_nu: f64,
    /// Lyapunov value at t = 0 (`V` or `V_d`).
    pub lyapunov0: f64,
    /// `k_V` or `k^d_V`.
    pub k_v: f64,
    /// `a` (single) or `b` (double).
    pub proof_constant: f64,
    pub edges: Vec<EdgeBound>,
    pub agents: Vec<AgentBound>,
}

impl BoundSet {
    /// `2 sqrt(k_V) exp(-rate t)`.
    pub fn envelope(&self, t: f64) -> f64 {
        2.0 * self.k_v.sqrt() * (-self.rate * t).exp()
    }

    pub fn min_xi(&self) -> f64 {
        self.agents.iter().map(|a| a.xi).fold(f64::INFINITY, f64::min)
    }

    /// `sum_i T / xi_i + n`, an upper bound on the trigger count over `[0, T]`.
    pub fn trigger_budget(&self, horizon: f64) -> f64 {
        self.agents.iter().map(|a| horizon / a.xi).sum::<f64>() + self.agents.len() as f64
    }
}

/// `-k + sqrt(k^2 + 2 k rho)`, written without cancellation.
pub fn length_bound(k: f64, rho: f64) -> f64 {
    if k <= 0.0 {
        return 0.0;
    }
    2.0 * k * rho / (k + (k * k + 2.0 * k * rho).sqrt())
}

/// `alpha / (c + alpha * rate)`, the guaranteed inter-trigger gap.
pub fn min_gap(alpha: f64, c: f64, rate: f64) -> f64 {
    alpha / (c + alpha * rate)
}

fn unguarded(spec: &FormationSpec, k: usize) -> Result<TensionParams> {
    TensionParams::with_guard(spec.margin(k), 0.0)
}

fn centered(v: &[Vector]) -> Vec<Vector> {
    let n = v.len() as f64;
    let mean = v.iter().fold(Vector::zeros(v[0].len()), |acc, x| acc + x) / n;
    v.iter().map(|x| x - &mean).collect()
}

fn y_of(spec: &FormationSpec, x: &[Vector]) -> Result<Vec<Vector>> {
    let tau = check_feasible(spec, DEFAULT_FEASIBILITY_TOL)?;
    Ok(x.iter().zip(&tau).map(|(xi, ti)| xi - ti).collect())
}

/// Per-edge bounds, with `kappa` the tension level each edge may reach.
fn edge_bounds(spec: &FormationSpec, kappa: f64) -> Result<Vec<EdgeBound>> {
    spec.graph()
        .edges()
        .iter()
        .enumerate()
        .map(|(k, &edge)| {
            let margin = spec.margin(k);
            let lb = length_bound(kappa, margin);
            Ok(EdgeBound {
                edge,
                margin,
                length_bound: lb,
                weight_cap: unguarded(spec, k)?.omega(lb)?,
                c_q: None,
            })
        })
        .collect()
}

/// `sum_{l in N_i} f_il(k_il)`.
fn weight_cap_sum(spec: &FormationSpec, edges: &[EdgeBound], i: usize) -> f64 {
    spec.graph()
        .neighbors(i)
        .iter()
        .map(|&(_, k)| edges[k].weight_cap)
        .sum()
}

pub fn compute_bounds_single(
    spec: &FormationSpec,
    s0: &InitialState,
    params: &SingleParams,
    a: f64,
) -> Result<BoundSet> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Parameter(format!("a={a} violates 0 < a < 1")));
    }
    s0.check_dims(spec.n(), spec.dim())?;
    let n = spec.n() as f64;
    let (alpha, beta, beta0) = (params.alpha, params.beta, params.beta0);
    let nu0 = total_tension_at(spec, &s0.x0)?;
    let k_nu = nu0 + n * alpha * alpha / (8.0 * a * beta);
    let edges = edge_bounds(spec, k_nu)?;

    let delta = centered(&y_of(spec, &s0.x0)?);
    let v0 = 0.5 * delta.iter().map(|d| d.norm_squared()).sum::<f64>();
    let k_v = v0 + n * alpha * alpha / (8.0 * beta0 * (beta0 - beta));
    let sqrt_kv = k_v.sqrt();

    let g = spec.graph();
    let agents = (0..spec.n())
        .map(|i| {
            let own = 2.0 * weight_cap_sum(spec, &edges, i) * sqrt_kv;
            let c = g
                .neighbors(i)
                .iter()
                .map(|&(j, k)| {
                    let gk = unguarded(spec, k)?.g_bound(edges[k].length_bound)?;
                    Ok(gk * (2.0 * alpha + own + 2.0 * weight_cap_sum(spec, &edges, j) * sqrt_kv))
                })
                .sum::<Result<f64>>()?;
            Ok(AgentBound {
                agent: i,
                c,
                xi: min_gap(alpha, c, beta),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(BoundSet {
        mode: ModeKind::Single,
        beta0,
        delta0: check_margins(spec).delta0,
        alpha,
        rate: beta,
        energy0: nu0,
        k_nu,
        lyapunov0: v0,
        k_v,
        proof_constant: a,
        edges,
        agents,
    })
}

pub fn compute_bounds_double(
    spec: &FormationSpec,
    s0: &InitialState,
    gains: &GainSet,
    params: &DoubleParams,
    b: f64,
) -> Result<BoundSet> {
    if !(b > 0.0 && b < gains.k3) {
        return Err(Error::Parameter(format!("b={b} violates 0 < b < k3={}", gains.k3)));
    }
    s0.check_dims(spec.n(), spec.dim())?;
    let zeros = vec![Vector::zeros(spec.dim()); spec.n()];
    let q0 = s0.q0.as_deref().unwrap_or(&zeros);
    let n = spec.n() as f64;
    let (alpha, beta_d) = (params.alpha_d, params.beta_d);
    let GainSet { k1, k2, k3, beta1, .. } = *gains;

    let nu0 = total_tension_at(spec, &s0.x0)?;
    let kinetic = 0.5 * q0.iter().map(|q| q.norm_squared()).sum::<f64>();
    let energy0 = k1 * nu0 + kinetic;
    let k_nu = energy0 + n * alpha * alpha / (8.0 * b * beta_d);
    let mut edges = edge_bounds(spec, k_nu / k1)?;

    // V_d(0) = 1/2 sum_i (z_i - zbar)^T (P (x) I_p) (z_i - zbar)
    let dy = centered(&y_of(spec, &s0.x0)?);
    let dq = centered(q0);
    let v0 = 0.5
        * dy.iter()
            .zip(&dq)
            .map(|(y, q)| gains.k0 * y.norm_squared() + 2.0 * k1 * y.dot(q) + k2 * q.norm_squared())
            .sum::<f64>();
    let k_v = v0 + n * alpha * alpha / (8.0 * beta1 * (gains.rate_cap() - beta_d));
    let sqrt_kv = k_v.sqrt();

    let g = spec.graph();
    for (k, &(i, j)) in g.edges().iter().enumerate() {
        let caps = weight_cap_sum(spec, &edges, i) + weight_cap_sum(spec, &edges, j);
        edges[k].c_q = Some(2.0 * alpha + 2.0 * ((k1 + k2) * caps + k3) * sqrt_kv);
    }

    let agents = (0..spec.n())
        .map(|i| {
            let c = g
                .neighbors(i)
                .iter()
                .map(|&(_, k)| {
                    let t = unguarded(spec, k)?;
                    let lb = edges[k].length_bound;
                    let c_q = edges[k].c_q.expect("filled above");
                    Ok(2.0 * k1 * t.g_bound(lb)? * sqrt_kv
                        + 4.0 * k2 * t.h_bound(lb)? * k_v
                        + k2 * edges[k].weight_cap * c_q)
                })
                .sum::<Result<f64>>()?;
            Ok(AgentBound {
                agent: i,
                c,
                xi: min_gap(alpha, c, beta_d),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(BoundSet {
        mode: ModeKind::Double,
        beta0: beta1,
        delta0: check_margins(spec).delta0,
        alpha,
        rate: beta_d,
        energy0,
        k_nu,
        lyapunov0: v0,
        k_v,
        proof_constant: b,
        edges,
        agents,
    })
}

/// Bounds for whatever mode the configuration selects.
pub fn compute_bounds(config: &ScenarioConfig) -> Result<BoundSet> {
    match &config.mode {
        Mode::Single { params, a } => compute_bounds_single(&config.formation, &config.initial, params, *a),
        Mode::Double { gains, params, b } => {
            compute_bounds_double(&config.formation, &config.initial, gains, params, *b)
        }
    }
}

/// Outcome of one certification check. `worst_margin` is positive when the
/// check passes; `None` means the check was vacuous.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub worst_margin: Option<f64>,
    /// Sample or trigger time where the worst margin occurred.
    pub at_time: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub mode: ModeKind,
    pub all_passed: bool,
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

/// Tracks the smallest margin seen by a check.
struct Worst {
    margin: f64,
    at: Option<f64>,
    detail: String,
}

impl Worst {
    fn new() -> Self {
        Worst {
            margin: f64::INFINITY,
            at: None,
            detail: String::new(),
        }
    }

    fn see(&mut self, margin: f64, t: f64, detail: impl FnOnce() -> String) {
        // NaN counts as the worst possible outcome
        let m = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
        if m < self.margin || self.at.is_none() {
            self.margin = m;
            self.at = Some(t);
            self.detail = detail();
        }
    }

    fn finish(self, name: &'static str, strict: bool) -> CheckResult {
        let passed = if self.at.is_none() {
            true
        } else if strict {
            self.margin > 0.0
        } else {
            self.margin >= 0.0
        };
        CheckResult {
            name,
            passed,
            worst_margin: self.margin.is_finite().then_some(self.margin),
            at_time: self.at,
            detail: self.detail,
        }
    }
}

/// Piecewise-constant control of `agent` in force at `t`: the last trigger
/// strictly before `t`, or the initial trigger at `t = 0`.
fn control_at<'a>(per_agent: &'a [Vec<&TriggerRecord>], agent: usize, t: f64) -> Option<&'a Vector> {
    let list = &per_agent[agent];
    let idx = list.partition_point(|r| r.time < t);
    if idx > 0 {
        Some(&list[idx - 1].control)
    } else {
        list.first().filter(|r| r.time == t).map(|r| &r.control)
    }
}

/// Measurement error recomputed from sampled states and the trigger log.
fn sample_error(
    spec: &FormationSpec,
    mode: &Mode,
    sample: &TraceSample,
    i: usize,
    control: &Vector,
) -> Result<Vector> {
    let mut sx = Vector::zeros(spec.dim());
    let mut sq = Vector::zeros(spec.dim());
    for &(j, k) in spec.graph().neighbors(i) {
        let y = &sample.x[i] - &sample.x[j] - spec.displacement_from(i, j, k);
        let w = unguarded(spec, k)?.omega(y.norm())?;
        sx.axpy(w, &y, 1.0);
        if let Some(q) = &sample.q {
            sq.axpy(w, &(&q[i] - &q[j]), 1.0);
        }
    }
    Ok(match mode {
        Mode::Single { .. } => sx + control,
        Mode::Double { gains, .. } => sx * gains.k1 + sq * gains.k2 + control,
    })
}

/// Re-evaluates every guarantee on a finished trace.
pub fn certify_trace(
    trace: &Trace,
    triggers: &[TriggerRecord],
    bounds: &BoundSet,
    config: &ScenarioConfig,
) -> Report {
    let spec = &config.formation;
    let g = spec.graph();
    let n = spec.n();
    let double = config.kind() == ModeKind::Double;
    let mut checks = Vec::new();

    let mut per_agent: Vec<Vec<&TriggerRecord>> = vec![Vec::new(); n];
    for r in triggers.iter().filter(|r| r.agent < n) {
        per_agent[r.agent].push(r);
    }
    for list in &mut per_agent {
        list.sort_by(|a, b| a.time.total_cmp(&b.time));
    }

    let mut connectivity = Worst::new();
    let mut length = Worst::new();
    let mut weight = Worst::new();
    let mut envelope = Worst::new();
    let mut rule = Worst::new();
    for s in &trace.samples {
        let t = s.t;
        for (k, &(i, j)) in g.edges().iter().enumerate() {
            let dist = (&s.x[i] - &s.x[j]).norm();
            connectivity.see(spec.delta() - dist, t, || {
                format!("edge ({},{}) length {dist:.6}", i + 1, j + 1)
            });
            let y = spec.edge_deviation(k, &s.x).norm();
            let eb = &bounds.edges[k];
            length.see(eb.length_bound - y, t, || {
                format!("edge ({},{}) |y_ij|={y:.6e} vs {:.6e}", i + 1, j + 1, eb.length_bound)
            });
            let w = unguarded(spec, k).and_then(|p| p.omega(y)).unwrap_or(f64::INFINITY);
            weight.see(eb.weight_cap - w, t, || {
                format!("edge ({},{}) w_ij={w:.6e} vs {:.6e}", i + 1, j + 1, eb.weight_cap)
            });
            let z = match &s.q {
                Some(q) if double => (y * y + (&q[i] - &q[j]).norm_squared()).sqrt(),
                _ => y,
            };
            let env = bounds.envelope(t);
            envelope.see(env + ENVELOPE_SLACK - z, t, || {
                format!("edge ({},{}) deviation {z:.6e} vs envelope {env:.6e}", i + 1, j + 1)
            });
        }
        let thr = config.mode.threshold(t);
        for i in 0..n {
            let e = control_at(&per_agent, i, t)
                .ok_or_else(|| Error::Trace(format!("agent {} has no trigger before t={t}", i + 1)))
                .and_then(|u| sample_error(spec, &config.mode, s, i, u))
                .map(|e| e.norm())
                .unwrap_or(f64::INFINITY);
            rule.see(thr + TRIGGER_SLACK - e, t, || {
                format!("agent {} |e|={e:.6e} vs threshold {thr:.6e}", i + 1)
            });
        }
    }
    checks.push(connectivity.finish("connectivity", true));
    checks.push(length.finish("edge_length_bound", false));
    checks.push(weight.finish("weight_bound", true));
    checks.push(envelope.finish("exponential_envelope", false));
    checks.push(rule.finish("trigger_rule", false));

    let mut gap = Worst::new();
    for (i, list) in per_agent.iter().enumerate() {
        let xi = bounds.agents[i].xi;
        if list.first().is_none_or(|r| r.time != 0.0) {
            gap.see(f64::NEG_INFINITY, 0.0, || format!("agent {} does not trigger at t=0", i + 1));
        }
        for pair in list.windows(2) {
            let d = pair[1].time - pair[0].time;
            gap.see(d - xi, pair[1].time, || {
                format!("agent {} gap {d:.6e} vs xi {xi:.6e}", i + 1)
            });
        }
    }
    checks.push(gap.finish("min_inter_trigger_gap", true));

    let budget = bounds.trigger_budget(config.horizon);
    let count = triggers.len() as f64;
    let mut cnt = Worst::new();
    cnt.see(budget - count, config.horizon, || {
        format!("{} triggers vs budget {budget:.6e}", triggers.len())
    });
    checks.push(cnt.finish("trigger_count", true));

    let mut horizon = Worst::new();
    let first = trace.samples.first().map(|s| s.t);
    let last = trace.samples.last().map(|s| s.t).unwrap_or(f64::NEG_INFINITY);
    let sorted = trace.samples.windows(2).all(|w| w[0].t < w[1].t);
    let margin = if first == Some(0.0) && sorted {
        last - (config.horizon - HORIZON_TOL)
    } else {
        f64::NEG_INFINITY
    };
    horizon.see(margin, last, || {
        match first {
            Some(f) => format!("trace covers [{f}, {last}] of [0, {}]", config.horizon),
            None => "trace has no samples".into(),
        }
    });
    checks.push(horizon.finish("horizon_complete", false));

    if let Some(end) = trace.samples.last() {
        let env = bounds.envelope(end.t);
        let mut terminal = Worst::new();
        for k in 0..g.m() {
            let y = spec.edge_deviation(k, &end.x).norm();
            terminal.see(env - y, end.t, || {
                format!("edge {} deviation {y:.6e} vs envelope {env:.6e}", k + 1)
            });
        }
        checks.push(terminal.finish("terminal_formation", false));

        if double {
            let mut speed = Worst::new();
            let cap = env + config.tolerances.speed_tol;
            if let Some(q) = &end.q {
                for (i, qi) in q.iter().enumerate() {
                    let s = qi.norm();
                    speed.see(cap - s, end.t, || format!("agent {} |q|={s:.6e} vs {cap:.6e}", i + 1));
                }
            } else {
                speed.see(f64::NEG_INFINITY, end.t, || "trace carries no velocities".into());
            }
            checks.push(speed.finish("terminal_speed", false));
        }
    }

    Report {
        mode: config.kind(),
        all_passed: checks.iter().all(|c| c.passed),
        checks,
    }
}
