//! Event-driven simulation of either controller.
//!
//! True states advance in closed form between events, so the only numerical
//! error comes from locating trigger instants.

use crate::bounds::{certify_trace, compute_bounds, BoundSet, Report};
use crate::config::{Mode, ModeKind, ScenarioConfig};
use crate::double::{error_double, event_control, next_trigger_time_double, propagate};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::single::{control_single, error_single, next_trigger_time_single, AgentKnowledge, TriggerRecord};
use crate::Vector;

/// Hard cap on trigger events per run.
pub const MAX_EVENTS: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub x: Vec<Vector>,
    /// Velocities (double integrators only).
    pub q: Option<Vec<Vector>>,
    /// `|e_i|` or `|E_i|` per agent as the agents see it; empty when unknown.
    pub error_norms: Vec<f64>,
    /// Threshold value at `t`; NaN when unknown.
    pub threshold: f64,
}

impl TraceSample {
    pub fn edge_lengths(&self, g: &Graph) -> Vec<f64> {
        g.edges().iter().map(|&(i, j)| (&self.x[i] - &self.x[j]).norm()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub kind: ModeKind,
    pub samples: Vec<TraceSample>,
}

impl Trace {
    pub fn last(&self) -> Option<&TraceSample> {
        self.samples.last()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trace: Trace,
    /// Sorted by time, then agent.
    pub triggers: Vec<TriggerRecord>,
    pub bounds: BoundSet,
    pub report: Report,
}

struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    t: f64,
    x: Vec<Vector>,
    q: Option<Vec<Vector>>,
    know: Vec<AgentKnowledge>,
    next: Vec<f64>,
    triggers: Vec<TriggerRecord>,
    samples: Vec<TraceSample>,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Self {
        let x = cfg.initial.x0.clone();
        let q = match cfg.mode {
            Mode::Single { .. } => None,
            Mode::Double { .. } => Some(
                cfg.initial
                    .q0
                    .clone()
                    .unwrap_or_else(|| vec![Vector::zeros(cfg.dim()); cfg.n()]),
            ),
        };
        let know = (0..cfg.n())
            .map(|i| AgentKnowledge::initial(&cfg.formation, i, &x, q.as_deref()))
            .collect();
        Sim {
            cfg,
            t: 0.0,
            x,
            q,
            know,
            next: vec![f64::INFINITY; cfg.n()],
            triggers: Vec::new(),
            samples: Vec::new(),
        }
    }

    fn error(&self, i: usize, t: f64) -> Result<Vector> {
        let spec = &self.cfg.formation;
        match &self.cfg.mode {
            Mode::Single { .. } => error_single(spec, &self.know[i], t),
            Mode::Double { gains, .. } => error_double(spec, gains, &self.know[i], t),
        }
    }

    fn advance(&mut self, to: f64) {
        let dt = to - self.t;
        if dt > 0.0 {
            match (&self.cfg.mode, &mut self.q) {
                (Mode::Double { gains, .. }, Some(q)) => {
                    for i in 0..self.x.len() {
                        let (xn, qn) = propagate(&self.x[i], &q[i], &self.know[i].control, gains.k3, dt);
                        self.x[i] = xn;
                        q[i] = qn;
                    }
                }
                _ => {
                    for (xi, k) in self.x.iter_mut().zip(&self.know) {
                        xi.axpy(dt, &k.control, 1.0);
                    }
                }
            }
        }
        self.t = to;
    }

    fn sample(&mut self) -> Result<()> {
        if self.samples.last().is_some_and(|s| s.t == self.t) {
            return Ok(());
        }
        let error_norms = (0..self.x.len())
            .map(|i| self.error(i, self.t).map(|e| e.norm()))
            .collect::<Result<_>>()?;
        self.samples.push(TraceSample {
            t: self.t,
            x: self.x.clone(),
            q: self.q.clone(),
            error_norms,
            threshold: self.cfg.mode.threshold(self.t),
        });
        Ok(())
    }

    fn fire(&mut self, i: usize, initial: bool) -> Result<()> {
        let t = self.t;
        let spec = &self.cfg.formation;
        let nbrs = spec.graph().neighbors(i);
        let rel_x: Vec<Vector> = nbrs.iter().map(|&(j, _)| &self.x[i] - &self.x[j]).collect();
        let rel_q: Option<Vec<Vector>> = self
            .q
            .as_ref()
            .map(|q| nbrs.iter().map(|&(j, _)| &q[i] - &q[j]).collect());
        let error_norm = if initial { 0.0 } else { self.error(i, t)?.norm() };
        let control = match (&self.cfg.mode, &rel_q) {
            (Mode::Double { gains, .. }, Some(rq)) => event_control(spec, gains, i, &rel_x, rq)?,
            _ => control_single(spec, i, &rel_x)?,
        };

        let k = &mut self.know[i];
        k.last_trigger = t;
        k.control = control.clone();
        for (idx, view) in k.neighbors.iter_mut().enumerate() {
            view.since = t;
            view.rel_x = rel_x[idx].clone();
            view.rel_q = rel_q.as_ref().map(|rq| rq[idx].clone());
        }
        for (idx, &(j, _)) in nbrs.iter().enumerate() {
            let view = self.know[j]
                .view_mut(i)
                .expect("neighbor lists are symmetric");
            view.since = t;
            view.rel_x = -&rel_x[idx];
            view.rel_q = rel_q.as_ref().map(|rq| -&rq[idx]);
            view.control = control.clone();
        }

        self.triggers.push(TriggerRecord {
            agent: i,
            time: t,
            control,
            error_norm,
            payload: nbrs.iter().map(|&(j, _)| j).zip(rel_x).collect(),
            payload_q: rel_q,
            velocity: self.q.as_ref().map(|q| q[i].clone()),
        });
        Ok(())
    }

    fn schedule(&mut self, i: usize) -> Result<()> {
        let cfg = self.cfg;
        let scan = &cfg.tolerances.scan;
        let crossing = match &cfg.mode {
            Mode::Single { params, .. } => {
                next_trigger_time_single(params, &cfg.formation, &self.know[i], self.t, cfg.horizon, scan)?
            }
            Mode::Double { gains, params, .. } => next_trigger_time_double(
                params,
                &cfg.formation,
                gains,
                &self.know[i],
                self.t,
                cfg.horizon,
                scan,
            )?,
        };
        self.next[i] = crossing.time().unwrap_or(f64::INFINITY);
        Ok(())
    }

    fn wrap(&self, agent: usize) -> impl Fn(Error) -> Error + '_ {
        move |e| Error::Run {
            t: self.t,
            agent,
            source: Box::new(e),
        }
    }

    fn run(mut self) -> Result<(Trace, Vec<TriggerRecord>)> {
        let n = self.cfg.n();
        let horizon = self.cfg.horizon;
        let dt = self.cfg.sample_dt;
        for i in 0..n {
            self.fire(i, true).map_err(self.wrap(i))?;
        }
        for i in 0..n {
            self.schedule(i).map_err(self.wrap(i))?;
        }
        self.sample().map_err(self.wrap(0))?;

        let grid_steps = (horizon / dt - 1e-9).ceil() as u64;
        let mut k = 1u64;
        loop {
            let grid_t = if k >= grid_steps { horizon } else { k as f64 * dt };
            let (agent, event_t) = self
                .next
                .iter()
                .copied()
                .enumerate()
                .fold((usize::MAX, f64::INFINITY), |best, (i, t)| if t < best.1 { (i, t) } else { best });
            if event_t <= grid_t {
                if self.triggers.len() >= MAX_EVENTS {
                    return Err(Error::Run {
                        t: self.t,
                        agent,
                        source: Box::new(Error::Parameter(format!("more than {MAX_EVENTS} trigger events"))),
                    });
                }
                self.advance(event_t.max(self.t));
                self.sample().map_err(self.wrap(agent))?;
                self.fire(agent, false).map_err(self.wrap(agent))?;
                self.schedule(agent).map_err(self.wrap(agent))?;
                let nbrs: Vec<usize> = self.cfg.formation.graph().neighbors(agent).iter().map(|&(j, _)| j).collect();
                for j in nbrs {
                    self.schedule(j).map_err(self.wrap(j))?;
                }
            } else {
                self.advance(grid_t);
                self.sample().map_err(self.wrap(0))?;
                if grid_t >= horizon {
                    break;
                }
                k += 1;
            }
        }
        // ties were fired in index order, so the log is already sorted by (t, agent)
        Ok((
            Trace {
                kind: self.cfg.kind(),
                samples: self.samples,
            },
            self.triggers,
        ))
    }
}

/// Simulates the scenario over `[0, horizon]` without certifying it.
pub fn simulate(config: &ScenarioConfig) -> Result<(Trace, Vec<TriggerRecord>)> {
    Sim::new(config).run()
}

/// Computes the bounds, simulates and certifies the result.
pub fn run(config: &ScenarioConfig) -> Result<RunOutput> {
    let bounds = compute_bounds(config)?;
    let (trace, triggers) = simulate(config)?;
    let report = certify_trace(&trace, &triggers, &bounds, config);
    Ok(RunOutput {
        trace,
        triggers,
        bounds,
        report,
    })
}

/// Certifies a previously recorded run.
pub fn replay_check(trace: &Trace, triggers: &[TriggerRecord], config: &ScenarioConfig) -> Result<Report> {
    if trace.kind != config.kind() {
        return Err(Error::Trace(format!(
            "trace is {} but the scenario is {}",
            trace.kind,
            config.kind()
        )));
    }
    let bounds = compute_bounds(config)?;
    Ok(certify_trace(trace, triggers, &bounds, config))
}
