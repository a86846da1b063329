//! Communication topology and the matrices built on it.
//!
//! Nodes are indexed from zero. Every edge is stored once as `(i, j)` with
//! `i < j`; that pair order is also the canonical orientation (tail `i`,
//! head `j`) used for the incidence matrix.

use std::collections::VecDeque;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative threshold below which an eigenvalue counts as zero.
pub const ZERO_EIGEN_REL: f64 = 1e-9;

/// Undirected, connected graph with labelled edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    /// `adj[i]` lists `(neighbor, edge index)` in ascending neighbor order.
    adj: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    /// Builds a graph, normalizing every pair to `(min, max)`.
    ///
    /// Rejects self-loops, duplicates, out-of-range nodes and disconnected
    /// input.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut normalized = Vec::with_capacity(edges.len());
        let mut adj = vec![Vec::new(); n];
        for (k, &(a, b)) in edges.iter().enumerate() {
            if a >= n || b >= n {
                return Err(Error::NodeOutOfRange { i: a, j: b, n });
            }
            if a == b {
                return Err(Error::SelfLoop(a, b));
            }
            let (i, j) = (a.min(b), a.max(b));
            if normalized.contains(&(i, j)) {
                return Err(Error::DuplicateEdge(i, j));
            }
            normalized.push((i, j));
            adj[i].push((j, k));
            adj[j].push((i, k));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let g = Graph {
            n,
            edges: normalized,
            adj,
        };
        if let Some(unreached) = g.first_unreachable() {
            return Err(Error::Disconnected(unreached));
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self::new(n, &edges)
    }

    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|j| (j - 1, j)).collect();
        Self::new(n, &edges)
    }

    /// Star with node 0 as the hub.
    pub fn star(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|j| (0, j)).collect();
        Self::new(n, &edges)
    }

    fn first_unreachable(&self) -> Option<usize> {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.iter().position(|s| !s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `(neighbor, edge index)` pairs of node `i`, sorted by neighbor.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.adj[i].iter().find(|&&(v, _)| v == j).map(|&(_, k)| k)
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        a
    }

    pub fn degree_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |r, c| {
            if r == c {
                self.degree(r) as f64
            } else {
                0.0
            }
        })
    }
}

/// Head/tail assignment for every edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Orientation {
    /// `(tail, head)` per edge.
    arcs: Vec<(usize, usize)>,
    n: usize,
}

impl Orientation {
    /// Tail is the smaller node index.
    pub fn canonical(g: &Graph) -> Self {
        Orientation {
            arcs: g.edges().to_vec(),
            n: g.n(),
        }
    }

    /// Canonical orientation with edge `k` reversed wherever `flip[k]` holds.
    pub fn with_flips(g: &Graph, flip: &[bool]) -> Result<Self> {
        if flip.len() != g.m() {
            return Err(Error::DimensionMismatch(format!(
                "{} flip flags for {} edges",
                flip.len(),
                g.m()
            )));
        }
        let arcs = g
            .edges()
            .iter()
            .zip(flip)
            .map(|(&(i, j), &f)| if f { (j, i) } else { (i, j) })
            .collect();
        Ok(Orientation { arcs, n: g.n() })
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    /// The n-by-m incidence matrix: -1 at the tail, +1 at the head.
    pub fn incidence(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.arcs.len());
        for (k, &(tail, head)) in self.arcs.iter().enumerate() {
            d[(tail, k)] = -1.0;
            d[(head, k)] = 1.0;
        }
        d
    }
}

/// Diagonal of the edge-weight matrix, one entry per edge label.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeights(pub Vec<f64>);

impl EdgeWeights {
    pub fn uniform(m: usize, w: f64) -> Self {
        EdgeWeights(vec![w; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `Deg - A`.
pub fn laplacian(g: &Graph) -> DMatrix<f64> {
    g.degree_matrix() - g.adjacency()
}

/// `D W D^T`.
pub fn weighted_laplacian(g: &Graph, orient: &Orientation, w: &EdgeWeights) -> Result<DMatrix<f64>> {
    if orient.arcs.len() != g.m() || orient.n != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "orientation is {}x{}, graph is {}x{}",
            orient.n,
            orient.arcs.len(),
            g.n(),
            g.m()
        )));
    }
    if w.0.len() != g.m() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} edges",
            w.0.len(),
            g.m()
        )));
    }
    let d = orient.incidence();
    let wd = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&w.0));
    Ok(&d * wd * d.transpose())
}

/// `I_n - (1/n) 1 1^T`.
pub fn centering_matrix(n: usize) -> DMatrix<f64> {
    let inv = 1.0 / n as f64;
    DMatrix::from_fn(n, n, |r, c| if r == c { 1.0 - inv } else { -inv })
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    sorted_eigenvalues(m)
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Smallest eigenvalue above `1e-9 * max(1, rho(M))`.
pub fn rho2(m: &DMatrix<f64>) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "rho2 needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let ev = sorted_eigenvalues(m);
    let radius = ev.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let threshold = ZERO_EIGEN_REL * radius.max(1.0);
    ev.into_iter()
        .find(|&v| v > threshold)
        .ok_or(Error::NoPositiveEigenvalue)
}

/// Algebraic connectivity `rho2(D D^T)`.
pub fn algebraic_connectivity(g: &Graph) -> Result<f64> {
    rho2(&laplacian(g))
}

/// Whether `D D^T - rho2(D D^T) K_n` is positive semidefinite.
///
/// Always true on a connected graph; kept as an executable check.
pub fn centering_psd_check(g: &Graph) -> bool {
    let l = laplacian(g);
    let Ok(lambda2) = rho2(&l) else {
        return false;
    };
    let gap = &l - centering_matrix(g.n()) * lambda2;
    let scale = spectral_radius(&l).max(1.0);
    sorted_eigenvalues(&gap)
        .first()
        .is_none_or(|&min| min >= -ZERO_EIGEN_REL * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        a.shape() == b.shape() && (a - b).amax() <= tol
    }

    #[test]
    fn triangle_laplacian() {
        let g = Graph::complete(3).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[2., -1., -1., -1., 2., -1., -1., -1., 2.]);
        assert_eq!(laplacian(&g), expected);
    }

    #[test]
    fn path2_laplacian() {
        let g = Graph::path(2).unwrap();
        assert_eq!(laplacian(&g), DMatrix::from_row_slice(2, 2, &[1., -1., -1., 1.]));
    }

    #[test]
    fn star_laplacian_rows() {
        let l = laplacian(&Graph::star(4).unwrap());
        assert_eq!(l[(0, 0)], 3.0);
        for r in 0..4 {
            assert_eq!(l.row(r).sum(), 0.0);
        }
        for r in 1..4 {
            assert_eq!(l[(r, r)], 1.0);
        }
    }

    #[test]
    fn construction_errors() {
        assert_eq!(Graph::new(0, &[]), Err(Error::EmptyGraph));
        assert_eq!(Graph::new(2, &[(1, 1)]), Err(Error::SelfLoop(1, 1)));
        assert_eq!(
            Graph::new(2, &[(0, 1), (1, 0)]),
            Err(Error::DuplicateEdge(0, 1))
        );
        assert!(matches!(
            Graph::new(2, &[(0, 2)]),
            Err(Error::NodeOutOfRange { .. })
        ));
        assert_eq!(Graph::new(3, &[(0, 1)]), Err(Error::Disconnected(2)));
        // no edges on two nodes is disconnected too
        assert_eq!(Graph::new(2, &[]), Err(Error::Disconnected(1)));
        assert!(Graph::new(1, &[]).is_ok());
    }

    #[test]
    fn pairs_are_normalized() {
        let g = Graph::new(3, &[(2, 0), (1, 2)]).unwrap();
        assert_eq!(g.edges(), &[(0, 2), (1, 2)]);
        assert_eq!(g.neighbors(2), &[(0, 0), (1, 1)]);
        assert_eq!(g.edge_index(2, 1), Some(1));
        assert_eq!(g.edge_index(0, 1), None);
    }

    #[test]
    fn incidence_columns() {
        let g = Graph::complete(4).unwrap();
        let d = Orientation::canonical(&g).incidence();
        for k in 0..g.m() {
            let col = d.column(k);
            assert_eq!(col.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(col.iter().filter(|&&v| v == -1.0).count(), 1);
            assert_eq!(col.sum(), 0.0);
        }
    }

    #[test]
    fn weighted_laplacian_cases() {
        let g = Graph::complete(3).unwrap();
        let o = Orientation::canonical(&g);
        let l = laplacian(&g);
        let unit = weighted_laplacian(&g, &o, &EdgeWeights::uniform(3, 1.0)).unwrap();
        assert!(close(&unit, &l, 1e-15));
        let twice = weighted_laplacian(&g, &o, &EdgeWeights::uniform(3, 2.0)).unwrap();
        assert!(close(&twice, &(l * 2.0), 1e-15));
        assert!(matches!(
            weighted_laplacian(&g, &o, &EdgeWeights(vec![1.0; 2])),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn weighted_laplacian_matches_entrywise_formula() {
        // Brute-force construction: diagonal sums incident weights, off-diagonal is -w.
        let g = Graph::new(4, &[(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)]).unwrap();
        let w = EdgeWeights(vec![0.3, 1.7, 2.2, 0.9, 4.1]);
        let mut expected = DMatrix::zeros(4, 4);
        for (k, &(i, j)) in g.edges().iter().enumerate() {
            expected[(i, i)] += w.0[k];
            expected[(j, j)] += w.0[k];
            expected[(i, j)] -= w.0[k];
            expected[(j, i)] -= w.0[k];
        }
        let flips = [true, false, true, true, false];
        let o = Orientation::with_flips(&g, &flips).unwrap();
        let lw = weighted_laplacian(&g, &o, &w).unwrap();
        assert!(close(&lw, &expected, 1e-12));
    }

    #[test]
    fn rho2_examples() {
        let tri = laplacian(&Graph::complete(3).unwrap());
        assert!((rho2(&tri).unwrap() - 3.0).abs() < 1e-12);
        let p2 = laplacian(&Graph::path(2).unwrap());
        assert!((rho2(&p2).unwrap() - 2.0).abs() < 1e-12);
        assert!((rho2(&DMatrix::identity(3, 3)).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(rho2(&DMatrix::zeros(2, 2)), Err(Error::NoPositiveEigenvalue));
    }

    #[test]
    fn centering_matrix_spectrum() {
        let k = centering_matrix(5);
        let ev = sorted_eigenvalues(&k);
        assert!(ev[0].abs() < 1e-12);
        for v in &ev[1..] {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert!((spectral_radius(&k) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn psd_check_examples() {
        assert!(centering_psd_check(&Graph::complete(3).unwrap()));
        assert!(centering_psd_check(&Graph::path(5).unwrap()));
        assert!(centering_psd_check(&Graph::star(6).unwrap()));
    }
}
