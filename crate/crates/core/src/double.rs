//! Event-triggered formation control for double integrators.
//!
//! The control splits into an event part frozen at triggers and a continuous
//! damping term:
//!
//! ```text
//! u_i(t) = u^d_i - k3 q_i(t)
//! u^d_i  = -k1 sum_j w_ij (x_i - x_j - d_ij) - k2 sum_j w_ij (q_i - q_j)   (at the last trigger)
//! ```
//!
//! The gains come from a 2x2 Riccati-type inequality in
//! `P = [[k0, k1], [k1, k2]]` that is solved in closed form at equality.

use nalgebra::Matrix2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::formation::FormationSpec;
use crate::root::{first_crossing, Crossing, ScanSettings};
use crate::single::{AgentKnowledge, NeighborView};
use crate::tension::TensionParams;
use crate::Vector;

/// Feedback gains and the quantities derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainSet {
    pub beta1: f64,
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    /// Smallest eigenvalue of `P`.
    pub rho2_p: f64,
}

/// Solves the gain inequality at equality and picks the default damping
/// `k3 = 2 / (k2 + sqrt(k1^2 + k2^2))`, which gives `k4 = 1`.
pub fn solve_gains(beta1: f64) -> Result<GainSet> {
    if !(beta1 > 0.0 && beta1.is_finite()) {
        return Err(Error::Parameter(format!("beta1={beta1} must be positive")));
    }
    let k1 = (2.0 / beta1).sqrt();
    let k2 = ((k1 + 2.0) / beta1).sqrt();
    let k0 = 2.0 * beta1 * k1 * k2;
    let half_trace = 0.5 * (k0 + k2);
    let half_diff = 0.5 * (k0 - k2);
    let rho2_p = half_trace - half_diff.hypot(k1);
    let k3 = 2.0 / (k2 + k1.hypot(k2));
    Ok(GainSet {
        beta1,
        k0,
        k1,
        k2,
        k3,
        k4: k3 * (k2 + k1.hypot(k2)) / 2.0,
        rho2_p,
    })
}

impl GainSet {
    /// Upper limit `4 / (k2 + sqrt(k1^2 + k2^2))` on the damping gain.
    pub fn k3_limit(&self) -> f64 {
        4.0 / (self.k2 + self.k1.hypot(self.k2))
    }

    /// Same `P`, different damping gain.
    pub fn with_k3(self, k3: f64) -> Result<Self> {
        let limit = self.k3_limit();
        if !(k3 > 0.0 && k3 < limit) {
            return Err(Error::Parameter(format!(
                "k3={k3} violates 0 < k3 < {limit}"
            )));
        }
        Ok(GainSet {
            k3,
            k4: k3 * (self.k2 + self.k1.hypot(self.k2)) / 2.0,
            ..self
        })
    }

    pub fn p(&self) -> Matrix2<f64> {
        Matrix2::new(self.k0, self.k1, self.k1, self.k2)
    }

    /// `(P C + C^T P)/2 - beta1 P B B^T P + 2 I` with `C = [[0,1],[0,0]]`,
    /// `B = [0, 1]^T`.
    pub fn riccati_matrix(&self) -> Matrix2<f64> {
        let c = Matrix2::new(0.0, 1.0, 0.0, 0.0);
        let p = self.p();
        let pb = nalgebra::Vector2::new(self.k1, self.k2);
        (p * c + c.transpose() * p) * 0.5 - pb * pb.transpose() * self.beta1 + Matrix2::identity() * 2.0
    }

    /// `P > 0` and the Riccati matrix is negative semidefinite, up to `tol`
    /// relative to the gains' scale.
    pub fn satisfies_riccati(&self, tol: f64) -> bool {
        let scale = self.k0.abs().max(self.k2.abs()).max(2.0);
        let r = self.riccati_matrix();
        let ev = r.symmetric_eigenvalues();
        self.rho2_p > 0.0 && ev.iter().all(|&e| e <= tol * scale)
    }

    /// `(2 - k4) rho2(P)`, the cap on `beta_d`.
    pub fn rate_cap(&self) -> f64 {
        (2.0 - self.k4) * self.rho2_p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoubleParams {
    pub alpha_d: f64,
    pub beta_d: f64,
}

impl DoubleParams {
    pub fn new(alpha_d: f64, beta_d: f64, gains: &GainSet) -> Result<Self> {
        if !(alpha_d > 0.0 && alpha_d.is_finite()) {
            return Err(Error::Parameter(format!("alpha_d={alpha_d} must be positive")));
        }
        let cap = gains.rate_cap();
        if !(beta_d > 0.0 && beta_d < cap) {
            return Err(Error::Parameter(format!(
                "beta_d={beta_d} violates 0 < beta_d < (2 - k4) rho2(P)={cap}"
            )));
        }
        Ok(DoubleParams { alpha_d, beta_d })
    }

    pub fn threshold(&self, t: f64) -> f64 {
        self.alpha_d * (-self.beta_d * t).exp()
    }
}

/// `(sum_j w_ij y_ij, sum_j w_ij (q_i - q_j))` with weights taken on `y_ij`.
pub fn weighted_sums(
    spec: &FormationSpec,
    i: usize,
    rel_x: &[Vector],
    rel_q: &[Vector],
) -> Result<(Vector, Vector)> {
    let nbrs = spec.graph().neighbors(i);
    if rel_x.len() != nbrs.len() || rel_q.len() != nbrs.len() {
        return Err(Error::DimensionMismatch(format!(
            "agent {i} has {} neighbors, got {}/{} relative states",
            nbrs.len(),
            rel_x.len(),
            rel_q.len()
        )));
    }
    let mut sx = Vector::zeros(spec.dim());
    let mut sq = Vector::zeros(spec.dim());
    for ((&(j, k), rx), rq) in nbrs.iter().zip(rel_x).zip(rel_q) {
        let y = rx - spec.displacement_from(i, j, k);
        let w = TensionParams::for_edge(spec, k)?.omega(y.norm())?;
        sx.axpy(w, &y, 1.0);
        sq.axpy(w, rq, 1.0);
    }
    Ok((sx, sq))
}

/// Event part `u^d_i` computed from states sensed at a trigger.
pub fn event_control(
    spec: &FormationSpec,
    gains: &GainSet,
    i: usize,
    sensed_rel_x: &[Vector],
    sensed_rel_q: &[Vector],
) -> Result<Vector> {
    let (sx, sq) = weighted_sums(spec, i, sensed_rel_x, sensed_rel_q)?;
    Ok(-(sx * gains.k1 + sq * gains.k2))
}

/// Applied control `u^d_i - k3 q_i(t)`.
pub fn control_double(gains: &GainSet, event_part: &Vector, q_now: &Vector) -> Vector {
    event_part - q_now * gains.k3
}

/// Exact solution of `x' = q, q' = u - k3 q` over `dt` with `u` held.
///
/// Works equally on absolute and relative states.
pub fn propagate(x: &Vector, q: &Vector, u: &Vector, k3: f64, dt: f64) -> (Vector, Vector) {
    let decay = (-k3 * dt).exp();
    // (1 - e^{-k3 dt}) / k3 without cancellation
    let phi1 = -(-k3 * dt).exp_m1() / k3;
    let phi2 = (dt - phi1) / k3;
    let q_new = q * decay + u * phi1;
    let x_new = x + q * phi1 + u * phi2;
    (x_new, q_new)
}

/// Predicted `(x_i - x_j, q_i - q_j)` at `t` from the view.
pub fn predict_relative_double(
    knowledge: &AgentKnowledge,
    view: &NeighborView,
    gains: &GainSet,
    t: f64,
) -> Result<(Vector, Vector)> {
    if t < view.since || t < knowledge.last_trigger {
        return Err(Error::StaleKnowledge {
            agent: knowledge.agent,
            neighbor: view.neighbor,
            since: view.since.max(knowledge.last_trigger),
            t,
        });
    }
    let rel_q = view.rel_q.as_ref().ok_or_else(|| {
        Error::Parameter(format!(
            "agent {} has no relative velocity for neighbor {}",
            knowledge.agent, view.neighbor
        ))
    })?;
    let du = &knowledge.control - &view.control;
    Ok(propagate(&view.rel_x, rel_q, &du, gains.k3, t - view.since))
}

/// `E_i(t) = k1 e_i(t) + k2 e_qi(t)` on predicted relative states.
pub fn error_double(spec: &FormationSpec, gains: &GainSet, knowledge: &AgentKnowledge, t: f64) -> Result<Vector> {
    let mut rel_x = Vec::with_capacity(knowledge.neighbors.len());
    let mut rel_q = Vec::with_capacity(knowledge.neighbors.len());
    for view in &knowledge.neighbors {
        let (rx, rq) = predict_relative_double(knowledge, view, gains, t)?;
        rel_x.push(rx);
        rel_q.push(rq);
    }
    let (sx, sq) = weighted_sums(spec, knowledge.agent, &rel_x, &rel_q)?;
    Ok(sx * gains.k1 + sq * gains.k2 + &knowledge.control)
}

/// First time after `from` at which `|E_i(t)| = alpha_d exp(-beta_d t)`.
pub fn next_trigger_time_double(
    params: &DoubleParams,
    spec: &FormationSpec,
    gains: &GainSet,
    knowledge: &AgentKnowledge,
    from: f64,
    horizon: f64,
    scan: &ScanSettings,
) -> Result<Crossing> {
    first_crossing(
        |t| Ok(error_double(spec, gains, knowledge, t)?.norm() - params.threshold(t)),
        from,
        horizon,
        scan,
    )
}
