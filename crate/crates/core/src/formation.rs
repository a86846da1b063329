//! Desired formations, their feasibility, and admissible starting states.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::Vector;

/// Absolute residual allowed when checking a feasibility witness.
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-9;

/// Target displacements over the edges of a graph plus the communication radius.
///
/// `d[k]` is `d_ij` for edge `k = (i, j)` with `i < j`; the reverse direction is
/// always derived as `-d[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormationSpec {
    graph: Graph,
    p: usize,
    d: Vec<Vector>,
    delta: f64,
    guard_rel: f64,
}

impl FormationSpec {
    /// Structural checks only (dimensions, positive radius).
    pub fn new(graph: Graph, p: usize, d: Vec<Vector>, delta: f64) -> Result<Self> {
        if p == 0 {
            return Err(Error::DimensionMismatch("spatial dimension must be positive".into()));
        }
        if d.len() != graph.m() {
            return Err(Error::DimensionMismatch(format!(
                "{} displacements for {} edges",
                d.len(),
                graph.m()
            )));
        }
        if let Some(k) = d.iter().position(|v| v.len() != p) {
            return Err(Error::DimensionMismatch(format!(
                "displacement {k} has dimension {}, expected {p}",
                d[k].len()
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Parameter(format!(
                "communication radius must be positive and finite, got {delta}"
            )));
        }
        Ok(FormationSpec {
            graph,
            p,
            d,
            delta,
            guard_rel: crate::tension::GUARD_REL,
        })
    }

    /// Like [`FormationSpec::new`], additionally requiring feasibility and
    /// `|d_ij| < delta` on every edge.
    pub fn validated(graph: Graph, p: usize, d: Vec<Vector>, delta: f64) -> Result<Self> {
        let spec = Self::new(graph, p, d, delta)?;
        check_feasible(&spec, DEFAULT_FEASIBILITY_TOL)?;
        let report = check_margins(&spec);
        if let Some(k) = report.margins.iter().position(|&m| m <= 0.0) {
            let (i, j) = spec.graph.edges()[k];
            return Err(Error::DisplacementTooLong {
                i,
                j,
                norm: spec.d[k].norm(),
                delta,
            });
        }
        Ok(spec)
    }

    /// Replaces the relative margin guard used by tension evaluations.
    pub fn with_guard(mut self, guard_rel: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&guard_rel) {
            return Err(Error::Parameter(format!(
                "margin guard must lie in [0, 1), got {guard_rel}"
            )));
        }
        self.guard_rel = guard_rel;
        Ok(self)
    }

    pub fn guard_rel(&self) -> f64 {
        self.guard_rel
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Displacements in canonical edge order.
    pub fn displacements(&self) -> &[Vector] {
        &self.d
    }

    /// `d_ij` as seen from `i`, for a neighbor `j` reached over edge `k`.
    pub fn displacement_from(&self, i: usize, j: usize, k: usize) -> Vector {
        if i < j {
            self.d[k].clone()
        } else {
            -&self.d[k]
        }
    }

    /// `delta - |d_ij|` for edge `k`; the pole of that edge's tension.
    pub fn margin(&self, k: usize) -> f64 {
        self.delta - self.d[k].norm()
    }

    /// `x_i - x_j - d_ij` for edge `k = (i, j)`.
    pub fn edge_deviation(&self, k: usize, x: &[Vector]) -> Vector {
        let (i, j) = self.graph.edges()[k];
        &x[i] - &x[j] - &self.d[k]
    }
}

/// Initial positions and, for double integrators, velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub x0: Vec<Vector>,
    pub q0: Option<Vec<Vector>>,
}

impl InitialState {
    pub fn positions(x0: Vec<Vector>) -> Self {
        InitialState { x0, q0: None }
    }

    pub fn with_velocities(x0: Vec<Vector>, q0: Vec<Vector>) -> Self {
        InitialState { x0, q0: Some(q0) }
    }

    pub fn check_dims(&self, n: usize, p: usize) -> Result<()> {
        let check = |what: &str, v: &[Vector]| -> Result<()> {
            if v.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{what} has {} agents, expected {n}",
                    v.len()
                )));
            }
            if let Some(i) = v.iter().position(|x| x.len() != p) {
                return Err(Error::DimensionMismatch(format!(
                    "{what}[{i}] has dimension {}, expected {p}",
                    v[i].len()
                )));
            }
            Ok(())
        };
        check("x0", &self.x0)?;
        if let Some(q0) = &self.q0 {
            check("q0", q0)?;
        }
        Ok(())
    }
}

/// Returns a point of the formation set with `tau_0 = 0`.
pub fn check_feasible(spec: &FormationSpec, tol: f64) -> Result<Vec<Vector>> {
    check_feasible_from(spec, 0, tol)
}

/// Feasibility witness grown over the BFS tree rooted at `root`.
///
/// Sets `tau_root = 0`, propagates `tau_j = tau_i - d_ij` along tree edges and
/// then checks every edge residual against `tol`.
pub fn check_feasible_from(spec: &FormationSpec, root: usize, tol: f64) -> Result<Vec<Vector>> {
    let g = spec.graph();
    if root >= g.n() {
        return Err(Error::DimensionMismatch(format!("root {root} out of range")));
    }
    let mut tau: Vec<Option<Vector>> = vec![None; g.n()];
    tau[root] = Some(Vector::zeros(spec.dim()));
    let mut queue = VecDeque::from([root]);
    while let Some(i) = queue.pop_front() {
        let ti = tau[i].clone().expect("visited nodes carry a value");
        for &(j, k) in g.neighbors(i) {
            if tau[j].is_none() {
                tau[j] = Some(&ti - spec.displacement_from(i, j, k));
                queue.push_back(j);
            }
        }
    }
    let tau: Vec<Vector> = tau
        .into_iter()
        .map(|t| t.expect("connected graph reaches every node"))
        .collect();
    for (k, &(i, j)) in g.edges().iter().enumerate() {
        let residual = (&tau[i] - &tau[j] - &spec.d[k]).norm();
        if residual > tol {
            return Err(Error::Infeasible { i, j, residual });
        }
    }
    Ok(tau)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginReport {
    pub holds: bool,
    /// `delta - |d_ij|` per edge.
    pub margins: Vec<f64>,
    /// Largest margin over all edges.
    pub delta0: f64,
}

pub fn check_margins(spec: &FormationSpec) -> MarginReport {
    let margins: Vec<f64> = (0..spec.graph().m()).map(|k| spec.margin(k)).collect();
    let delta0 = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    MarginReport {
        holds: margins.iter().all(|&m| m > 0.0),
        margins,
        delta0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialReport {
    pub holds: bool,
    /// `|y_i(0) - y_j(0)|` per edge.
    pub lengths: Vec<f64>,
    /// Margin minus length per edge; positive when admissible.
    pub slack: Vec<f64>,
}

/// Strict `|x_i(0) - x_j(0) - d_ij| < delta - |d_ij|` on every edge.
pub fn check_initial(spec: &FormationSpec, s0: &InitialState) -> Result<InitialReport> {
    s0.check_dims(spec.n(), spec.dim())?;
    let m = spec.graph().m();
    let lengths: Vec<f64> = (0..m).map(|k| spec.edge_deviation(k, &s0.x0).norm()).collect();
    let slack: Vec<f64> = (0..m).map(|k| spec.margin(k) - lengths[k]).collect();
    Ok(InitialReport {
        holds: slack.iter().all(|&s| s > 0.0),
        lengths,
        slack,
    })
}
