//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

pub mod props;

use tether_core::{Mode, ScenarioConfig, TriggerRecord, Vector};

/// Cyclic Jacobi eigenvalue iteration for small symmetric matrices.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Edge weight written straight from its definition.
pub fn weight(l: f64, rho: f64) -> f64 {
    (2.0 * rho - l) / ((rho - l) * (rho - l))
}

/// Two agents on one edge, `x_2 - x_1` targeted at `(1, 0)` reversed, radius 3.
pub fn one_edge_text(mode: &str) -> String {
    let section = if mode == "single" {
        "[single]\nalpha = 1.0\nbeta = 0.5\n".to_string()
    } else {
        "[double]\nalpha_d = 1.0\nbeta_d = 0.3\n".to_string()
    };
    let q0 = if mode == "single" { "" } else { "q0 = [[0.3, -0.2], [-0.1, 0.4]]\n" };
    format!(
        "format_version = 1\nmode = \"{mode}\"\n\n[formation]\np = 2\ndelta = 3.0\nedges = [[1, 2]]\nd = [[1.0, 0.0]]\n\n\
         [initial]\nx0 = [[0.0, 0.0], [-0.4, 0.9]]\n{q0}\n{section}\n[run]\nhorizon = 5.0\nsample_dt = 0.01\n"
    )
}

type State = (Vec<Vector>, Vec<Vector>);

fn derivative(cfg: &ScenarioConfig, s: &State, u: &[Vector]) -> State {
    match &cfg.mode {
        Mode::Single { .. } => (u.to_vec(), vec![Vector::zeros(cfg.dim()); cfg.n()]),
        Mode::Double { gains, .. } => (
            s.1.clone(),
            u.iter().zip(&s.1).map(|(ui, qi)| ui - qi * gains.k3).collect(),
        ),
    }
}

fn axpy(s: &State, h: f64, d: &State) -> State {
    (
        s.0.iter().zip(&d.0).map(|(a, b)| a + b * h).collect(),
        s.1.iter().zip(&d.1).map(|(a, b)| a + b * h).collect(),
    )
}

fn rk4(cfg: &ScenarioConfig, s: &State, u: &[Vector], h: f64) -> State {
    let k1 = derivative(cfg, s, u);
    let k2 = derivative(cfg, &axpy(s, h / 2.0, &k1), u);
    let k3 = derivative(cfg, &axpy(s, h / 2.0, &k2), u);
    let k4 = derivative(cfg, &axpy(s, h, &k3), u);
    let mut out = s.clone();
    for (w, k) in [(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)] {
        out = axpy(&out, w * h / 6.0, k);
    }
    out
}

/// Control agent `i` computes from the exact state at a trigger.
fn reference_control(cfg: &ScenarioConfig, s: &State, i: usize) -> Vector {
    let spec = &cfg.formation;
    let mut sx = Vector::zeros(cfg.dim());
    let mut sq = Vector::zeros(cfg.dim());
    for (k, &(a, b)) in spec.graph().edges().iter().enumerate() {
        let (j, d) = if a == i {
            (b, spec.displacements()[k].clone())
        } else if b == i {
            (a, -&spec.displacements()[k])
        } else {
            continue;
        };
        let y = &s.0[i] - &s.0[j] - d;
        let w = weight(y.norm(), spec.delta() - spec.displacements()[k].norm());
        sx += &y * w;
        sq += (&s.1[i] - &s.1[j]) * w;
    }
    match &cfg.mode {
        Mode::Single { .. } => -sx,
        Mode::Double { gains, .. } => -(sx * gains.k1 + sq * gains.k2),
    }
}

/// Fixed-step RK4 of the closed loop, taking only trigger instants from the
/// log. Steps are cut at trigger and output times. Returns the state at each
/// of `at` (ascending).
pub fn dense_reference(cfg: &ScenarioConfig, triggers: &[TriggerRecord], at: &[f64], h: f64) -> Vec<State> {
    let n = cfg.n();
    let q0 = cfg.initial.q0.clone().unwrap_or_else(|| vec![Vector::zeros(cfg.dim()); n]);
    let mut s: State = (cfg.initial.x0.clone(), q0);
    let mut u = vec![Vector::zeros(cfg.dim()); n];
    let mut t = 0.0;
    let mut ti = 0;
    let mut out = Vec::with_capacity(at.len());
    for &target in at {
        loop {
            // fire every trigger due at the current time
            while ti < triggers.len() && triggers[ti].time <= t {
                u[triggers[ti].agent] = reference_control(cfg, &s, triggers[ti].agent);
                ti += 1;
            }
            if t >= target {
                break;
            }
            let next_trigger = triggers.get(ti).map_or(f64::INFINITY, |r| r.time);
            let stop = target.min(next_trigger);
            let step = h.min(stop - t);
            s = rk4(cfg, &s, &u, step);
            t = if t + step >= stop - 1e-15 { stop } else { t + step };
        }
        out.push(s.clone());
    }
    out
}
