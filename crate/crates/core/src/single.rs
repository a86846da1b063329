//! Event-triggered formation control for single integrators.
//!
//! Each agent holds its control constant between its own triggers. The
//! measurement error is the gap between the weighted edge sum evaluated now and
//! the one frozen at the last trigger:
//!
//! ```text
//! e_i(t) = sum_j w_ij(t) (x_i(t) - x_j(t) - d_ij) + u_i
//! ```
//!
//! and the next trigger is the first time `|e_i(t)|` reaches
//! `alpha * exp(-beta * t)`. Between events an agent predicts every relative
//! position from the last exchanged payload, so it needs no sensing until it
//! fires again.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::formation::FormationSpec;
use crate::root::{first_crossing, Crossing, ScanSettings};
use crate::tension::TensionParams;
use crate::Vector;

/// Threshold parameters of the trigger rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingleParams {
    pub alpha: f64,
    pub beta: f64,
    pub beta0: f64,
}

impl SingleParams {
    pub fn new(alpha: f64, beta: f64, beta0: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Parameter(format!("alpha={alpha} must be positive")));
        }
        if !(beta > 0.0) {
            return Err(Error::Parameter(format!("beta={beta} must be positive")));
        }
        if !(beta < beta0) {
            return Err(Error::Parameter(format!(
                "beta={beta} violates beta < beta0={beta0}"
            )));
        }
        Ok(SingleParams { alpha, beta, beta0 })
    }

    /// `alpha * exp(-beta t)`.
    pub fn threshold(&self, t: f64) -> f64 {
        self.alpha * (-self.beta * t).exp()
    }
}

/// Agent `i`'s latest information about one neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborView {
    pub neighbor: usize,
    pub edge: usize,
    /// Time the relative state below was exact.
    pub since: f64,
    /// `x_i - x_j` at `since`.
    pub rel_x: Vector,
    /// `q_i - q_j` at `since` (double integrators only).
    pub rel_q: Option<Vector>,
    /// The neighbor's current piecewise-constant control.
    pub control: Vector,
}

/// Everything agent `i` needs to evaluate its own trigger condition.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentKnowledge {
    pub agent: usize,
    pub last_trigger: f64,
    /// Own piecewise-constant control (`u_i`, or the event part `u^d_i`).
    pub control: Vector,
    /// One entry per neighbor, in the graph's neighbor order.
    pub neighbors: Vec<NeighborView>,
}

impl AgentKnowledge {
    /// Knowledge before the first trigger: zero controls, exact relative states.
    pub fn initial(spec: &FormationSpec, agent: usize, x: &[Vector], q: Option<&[Vector]>) -> Self {
        let p = spec.dim();
        let neighbors = spec
            .graph()
            .neighbors(agent)
            .iter()
            .map(|&(j, k)| NeighborView {
                neighbor: j,
                edge: k,
                since: 0.0,
                rel_x: &x[agent] - &x[j],
                rel_q: q.map(|q| &q[agent] - &q[j]),
                control: Vector::zeros(p),
            })
            .collect();
        AgentKnowledge {
            agent,
            last_trigger: 0.0,
            control: Vector::zeros(p),
            neighbors,
        }
    }

    pub fn view_mut(&mut self, neighbor: usize) -> Option<&mut NeighborView> {
        self.neighbors.iter_mut().find(|v| v.neighbor == neighbor)
    }

    fn check_fresh(&self, view: &NeighborView, t: f64) -> Result<()> {
        if t < view.since || t < self.last_trigger {
            return Err(Error::StaleKnowledge {
                agent: self.agent,
                neighbor: view.neighbor,
                since: view.since.max(self.last_trigger),
                t,
            });
        }
        Ok(())
    }
}

/// One agent's trigger event.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerRecord {
    pub agent: usize,
    pub time: f64,
    /// New piecewise-constant control (`u_i` or `u^d_i`).
    pub control: Vector,
    /// `|e_i|` (or `|E_i|`) just before the reset; zero for the initial trigger.
    pub error_norm: f64,
    /// `(neighbor, x_i - x_j)` sensed at the trigger.
    pub payload: Vec<(usize, Vector)>,
    /// `q_i - q_j` per neighbor (double integrators only).
    pub payload_q: Option<Vec<Vector>>,
    /// Own velocity at the trigger (double integrators only).
    pub velocity: Option<Vector>,
}

/// `sum_j w_ij (x_i - x_j - d_ij)` from relative positions aligned with the
/// graph's neighbor list of `i`.
pub fn weighted_edge_sum(spec: &FormationSpec, i: usize, rel_x: &[Vector]) -> Result<Vector> {
    let nbrs = spec.graph().neighbors(i);
    if rel_x.len() != nbrs.len() {
        return Err(Error::DimensionMismatch(format!(
            "agent {i} has {} neighbors, got {} relative positions",
            nbrs.len(),
            rel_x.len()
        )));
    }
    let mut acc = Vector::zeros(spec.dim());
    for (&(j, k), rel) in nbrs.iter().zip(rel_x) {
        let y = rel - spec.displacement_from(i, j, k);
        let w = TensionParams::for_edge(spec, k)?.omega(y.norm())?;
        acc.axpy(w, &y, 1.0);
    }
    Ok(acc)
}

/// Control computed at a trigger from the sensed relative positions:
/// `u_i = -sum_j w_ij (x_i - x_j - d_ij)`.
pub fn control_single(spec: &FormationSpec, i: usize, sensed_rel_x: &[Vector]) -> Result<Vector> {
    Ok(-weighted_edge_sum(spec, i, sensed_rel_x)?)
}

/// `x_i(t) - x_j(t)` extrapolated from the view with both controls held.
pub fn predict_relative_single(knowledge: &AgentKnowledge, view: &NeighborView, t: f64) -> Result<Vector> {
    knowledge.check_fresh(view, t)?;
    let du = &knowledge.control - &view.control;
    Ok(&view.rel_x + du * (t - view.since))
}

/// `e_i(t)` on predicted relative positions; zero at the agent's own trigger.
pub fn error_single(spec: &FormationSpec, knowledge: &AgentKnowledge, t: f64) -> Result<Vector> {
    let rel: Vec<Vector> = knowledge
        .neighbors
        .iter()
        .map(|v| predict_relative_single(knowledge, v, t))
        .collect::<Result<_>>()?;
    Ok(weighted_edge_sum(spec, knowledge.agent, &rel)? + &knowledge.control)
}

/// First time after `from` at which `|e_i(t)| = alpha exp(-beta t)`.
pub fn next_trigger_time_single(
    params: &SingleParams,
    spec: &FormationSpec,
    knowledge: &AgentKnowledge,
    from: f64,
    horizon: f64,
    scan: &ScanSettings,
) -> Result<Crossing> {
    first_crossing(
        |t| Ok(error_single(spec, knowledge, t)?.norm() - params.threshold(t)),
        from,
        horizon,
        scan,
    )
}
