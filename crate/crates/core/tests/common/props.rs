//! Property checks shared by the proptest suite and the acceptance target.

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use tether_core::bounds::{length_bound, min_gap};
use tether_core::formation::check_feasible;
use tether_core::graph::{
    algebraic_connectivity, centering_matrix, centering_psd_check, laplacian, weighted_laplacian, EdgeWeights,
    Orientation,
};
use tether_core::tension::TensionParams;
use tether_core::{FormationSpec, Graph, Vector};

use super::jacobi_eigenvalues;

/// Connected graph: random spanning tree plus a random subset of the other pairs.
pub fn connected_graph() -> impl Strategy<Value = Graph> {
    (2usize..=6).prop_flat_map(|n| {
        let parents = (1..n).map(|k| 0..k).collect::<Vec<_>>();
        let extra = proptest::collection::vec(any::<bool>(), n * (n - 1) / 2);
        (Just(n), parents, extra).prop_map(|(n, parents, extra)| {
            let mut edges: Vec<(usize, usize)> = parents.iter().enumerate().map(|(k, &p)| (p, k + 1)).collect();
            let mut idx = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if extra[idx] && !edges.contains(&(i, j)) {
                        edges.push((i, j));
                    }
                    idx += 1;
                }
            }
            Graph::new(n, &edges).unwrap()
        })
    })
}

fn to_rows(m: &tether_core::nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Feasible iff every simple cycle has zero signed displacement sum.
pub fn cycle_sum_oracle(g: &Graph, d: &[Vector], tol: f64) -> bool {
    let n = g.n();
    let signed = |a: usize, b: usize| -> Vector {
        let k = g.edge_index(a, b).unwrap();
        if g.edges()[k].0 == a {
            d[k].clone()
        } else {
            -&d[k]
        }
    };
    // depth-first enumeration of simple cycles rooted at their smallest node
    fn walk(
        g: &Graph,
        start: usize,
        path: &mut Vec<usize>,
        acc: Vector,
        signed: &dyn Fn(usize, usize) -> Vector,
        tol: f64,
    ) -> bool {
        let last = *path.last().unwrap();
        for &(next, _) in g.neighbors(last) {
            if next == start && path.len() >= 3 {
                if (&acc + signed(last, next)).norm() > tol {
                    return false;
                }
            } else if next > start && !path.contains(&next) {
                path.push(next);
                let ok = walk(g, start, path, &acc + signed(last, next), signed, tol);
                path.pop();
                if !ok {
                    return false;
                }
            }
        }
        true
    }
    (0..n).all(|s| walk(g, s, &mut vec![s], Vector::zeros(d[0].len()), &signed, tol))
}

pub fn orientation_case() -> impl Strategy<Value = (Graph, Vec<bool>, Vec<f64>)> {
    (
        connected_graph(),
        proptest::collection::vec(any::<bool>(), 15),
        proptest::collection::vec(0.1f64..10.0, 15),
    )
}

pub fn feasibility_case() -> impl Strategy<Value = (Graph, Vec<Vec<f64>>, Option<(usize, f64)>)> {
    (
        connected_graph(),
        proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, 2), 6),
        proptest::option::of((0usize..15, 1e-3f64..1.0)),
    )
}

pub fn bound_case() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.05f64..10.0, 0.1f64..20.0, 0.01f64..3.0)
}

/// `D D^T - rho2 K_n` is positive semidefinite, checked with Jacobi.
pub fn check_psd(g: &Graph) -> Result<(), TestCaseError> {
    let l = laplacian(g);
    let lambda2 = algebraic_connectivity(g).unwrap();
    let ev = jacobi_eigenvalues(to_rows(&l));
    let scale = ev[ev.len() - 1].max(1.0);
    prop_assert!(ev[0].abs() < 1e-9);
    prop_assert!((ev[1] - lambda2).abs() < 1e-8 * scale);
    let gap = &l - centering_matrix(g.n()) * lambda2;
    let min = jacobi_eigenvalues(to_rows(&gap))[0];
    prop_assert!(min >= -1e-9 * scale, "min eigenvalue {}", min);
    prop_assert!(centering_psd_check(g));
    Ok(())
}

/// `D D^T` equals `Deg - A`, and `D W D^T` the weighted version, whatever
/// the edge orientation.
pub fn check_orientation((g, flips, weights): &(Graph, Vec<bool>, Vec<f64>)) -> Result<(), TestCaseError> {
    let m = g.m();
    let l = laplacian(g);
    let o = Orientation::with_flips(g, &flips[..m]).unwrap();
    let d = o.incidence();
    prop_assert!((&d * d.transpose() - &l).amax() < 1e-12);
    let w = EdgeWeights(weights[..m].to_vec());
    let lw = weighted_laplacian(g, &o, &w).unwrap();
    let mut direct = tether_core::nalgebra::DMatrix::zeros(g.n(), g.n());
    for (k, &(i, j)) in g.edges().iter().enumerate() {
        direct[(i, j)] -= w.0[k];
        direct[(j, i)] -= w.0[k];
        direct[(i, i)] += w.0[k];
        direct[(j, j)] += w.0[k];
    }
    prop_assert!((lw - direct).amax() < 1e-12);
    Ok(())
}

/// The feasibility checker agrees with the cycle-sum oracle.
pub fn check_feasibility(
    (g, tau, perturb): &(Graph, Vec<Vec<f64>>, Option<(usize, f64)>),
) -> Result<(), TestCaseError> {
    let mut d: Vec<Vector> = g
        .edges()
        .iter()
        .map(|&(i, j)| Vector::from_column_slice(&tau[i]) - Vector::from_column_slice(&tau[j]))
        .collect();
    if let Some((k, eps)) = *perturb {
        d[k % g.m()][0] += eps;
    }
    let spec = FormationSpec::new(g.clone(), 2, d.clone(), 100.0).unwrap();
    prop_assert_eq!(check_feasible(&spec, 1e-9).is_ok(), cycle_sum_oracle(g, &d, 1e-9));
    Ok(())
}

/// Weight, bound functions and tension increase along an edge.
pub fn check_tension_monotone(rho: f64) -> Result<(), TestCaseError> {
    let t = TensionParams::new(rho).unwrap();
    let grid: Vec<f64> = (0..200).map(|k| rho * 0.99 * k as f64 / 199.0).collect();
    for w in grid.windows(2) {
        prop_assert!(t.omega(w[1]).unwrap() > t.omega(w[0]).unwrap());
        prop_assert!(t.g_bound(w[1]).unwrap() > t.g_bound(w[0]).unwrap());
        prop_assert!(t.h_bound(w[1]).unwrap() > t.h_bound(w[0]).unwrap());
        prop_assert!(t.nu(w[1]).unwrap() > t.nu(w[0]).unwrap());
    }
    prop_assert!(t.omega(0.0).unwrap() > 0.0);
    Ok(())
}

/// Edge bounds grow with the energy bound; the gap shrinks as `c` grows.
pub fn check_bound_monotone(&(rho, alpha, rate): &(f64, f64, f64)) -> Result<(), TestCaseError> {
    let ks: Vec<f64> = (1..200).map(|k| 1e-3 * 1.1f64.powi(k)).collect();
    for w in ks.windows(2) {
        let (a, b) = (length_bound(w[0], rho), length_bound(w[1], rho));
        prop_assert!(b > a && b < rho);
    }
    let cs: Vec<f64> = (0..200).map(|k| 1e-3 * 1.2f64.powi(k)).collect();
    for w in cs.windows(2) {
        prop_assert!(min_gap(alpha, w[1], rate) < min_gap(alpha, w[0], rate));
    }
    Ok(())
}
