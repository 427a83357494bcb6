//! Undirected unweighted graphs and their Laplacian spectra.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::matops::{symmetric_eigen, Matrix};
use crate::tolerance::Tolerances;

/// Simple undirected graph on nodes `1..=node_count`.
#[derive(Debug, Clone, PartialEq)]
pub struct UndirectedGraph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
}

impl UndirectedGraph {
    /// Builds a graph from 1-based edge pairs. Rejects self-loops, duplicate
    /// edges (in either orientation) and out-of-range indices.
    pub fn new(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if node_count < 2 {
            return Err(Error::InvalidGraph(format!(
                "need at least 2 nodes, got {node_count}"
            )));
        }
        let mut seen = HashSet::new();
        for &(i, j) in edges {
            if i == 0 || j == 0 || i > node_count || j > node_count {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) has a node index outside 1..={node_count}"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at node {i}")));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({i}, {j})")));
            }
        }
        Ok(Self { node_count, edges: edges.to_vec() })
    }

    pub fn path(node_count: usize) -> Result<Self> {
        let edges: Vec<_> = (1..node_count).map(|i| (i, i + 1)).collect();
        Self::new(node_count, &edges)
    }

    pub fn complete(node_count: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 1..=node_count {
            for j in (i + 1)..=node_count {
                edges.push((i, j));
            }
        }
        Self::new(node_count, &edges)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

/// `L = D - Adj`.
pub fn laplacian(g: &UndirectedGraph) -> Matrix {
    let n = g.node_count;
    let mut l = Matrix::zeros(n, n);
    for &(i, j) in &g.edges {
        let (i, j) = (i - 1, j - 1);
        l[(i, j)] = -1.0;
        l[(j, i)] = -1.0;
        l[(i, i)] += 1.0;
        l[(j, j)] += 1.0;
    }
    l
}

/// Laplacian together with its ordered spectrum and orthogonal diagonalizer.
#[derive(Debug, Clone)]
pub struct LaplacianSpectrum {
    pub laplacian: Matrix,
    /// Ascending; `lambdas[0]` is the (numerically) zero eigenvalue.
    pub lambdas: Vec<f64>,
    /// Columns are eigenvectors; column 0 is `+1/√N`.
    pub u: Matrix,
    pub lambda2: f64,
    pub lambda_n: f64,
}

impl LaplacianSpectrum {
    pub fn node_count(&self) -> usize {
        self.lambdas.len()
    }

    /// `U` without its first column.
    pub fn u2(&self) -> Matrix {
        let n = self.node_count();
        self.u.columns(1, n - 1).into_owned()
    }
}

/// Spectral decomposition of the Laplacian of a connected graph.
pub fn spectrum(g: &UndirectedGraph, tol: &Tolerances) -> Result<LaplacianSpectrum> {
    let l = laplacian(g);
    let eig = symmetric_eigen(&l, tol)?;
    let n = g.node_count;
    let lambda2 = eig.eigenvalues[1];
    let lambda_n = eig.eigenvalues[n - 1];
    if lambda2 <= tol.conn * lambda_n {
        return Err(Error::NotConnected { lambda2 });
    }
    let mut u = eig.vectors;
    if u.column(0).sum() < 0.0 {
        u.column_mut(0).neg_mut();
    }
    Ok(LaplacianSpectrum { laplacian: l, lambdas: eig.eigenvalues, u, lambda2, lambda_n })
}

/// `Π = I_N - (1/N) 1 1ᵀ`.
pub fn disagreement_projector(n: usize) -> Matrix {
    Matrix::identity(n, n) - Matrix::from_element(n, n, 1.0 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn k2_laplacian_and_spectrum() {
        let g = UndirectedGraph::new(2, &[(1, 2)]).unwrap();
        assert_eq!(laplacian(&g), Matrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let s = spectrum(&g, &tol()).unwrap();
        assert_relative_eq!(s.lambdas[0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(s.lambdas[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn triangle_is_complete_graph() {
        let g = UndirectedGraph::new(3, &[(1, 2), (2, 3), (1, 3)]).unwrap();
        let expected = Matrix::identity(3, 3) * 2.0
            - (Matrix::from_element(3, 3, 1.0) - Matrix::identity(3, 3));
        assert_eq!(laplacian(&g), expected);
    }

    #[test]
    fn k4_spectrum() {
        let s = spectrum(&UndirectedGraph::complete(4).unwrap(), &tol()).unwrap();
        for (got, want) in s.lambdas.iter().zip([0.0, 4.0, 4.0, 4.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn path8_matches_displayed_laplacian() {
        let l = laplacian(&UndirectedGraph::path(8).unwrap());
        for i in 0..8 {
            let deg = if i == 0 || i == 7 { 1.0 } else { 2.0 };
            assert_eq!(l[(i, i)], deg);
            for j in 0..8 {
                if i.abs_diff(j) == 1 {
                    assert_eq!(l[(i, j)], -1.0);
                } else if i != j {
                    assert_eq!(l[(i, j)], 0.0);
                }
            }
        }
        let s = spectrum(&UndirectedGraph::path(8).unwrap(), &tol()).unwrap();
        assert!((s.lambda_n - 3.8478).abs() < 1e-3);
        assert_relative_eq!(s.lambda2, 2.0 - 2.0 * (std::f64::consts::PI / 8.0).cos(), epsilon = 1e-12);
    }

    #[test]
    fn first_column_is_positive_constant() {
        let s = spectrum(&UndirectedGraph::path(5).unwrap(), &tol()).unwrap();
        for i in 0..5 {
            assert_relative_eq!(s.u[(i, 0)], 1.0 / 5f64.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn invalid_graphs() {
        assert!(matches!(UndirectedGraph::new(3, &[(1, 1)]), Err(Error::InvalidGraph(_))));
        assert!(matches!(UndirectedGraph::new(3, &[(1, 2), (2, 1)]), Err(Error::InvalidGraph(_))));
        assert!(matches!(UndirectedGraph::new(3, &[(1, 4)]), Err(Error::InvalidGraph(_))));
        assert!(matches!(UndirectedGraph::new(3, &[(0, 1)]), Err(Error::InvalidGraph(_))));
        assert!(matches!(UndirectedGraph::new(1, &[]), Err(Error::InvalidGraph(_))));
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let g = UndirectedGraph::new(4, &[(1, 2), (3, 4)]).unwrap();
        assert!(matches!(spectrum(&g, &tol()), Err(Error::NotConnected { .. })));
    }

    #[test]
    fn projector_small_cases() {
        assert_eq!(disagreement_projector(1), Matrix::from_element(1, 1, 0.0));
        assert_eq!(
            disagreement_projector(2),
            Matrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5])
        );
        let p = disagreement_projector(8);
        assert_relative_eq!(p.trace(), 7.0, epsilon = 1e-14);
        assert!((p * Matrix::from_element(8, 1, 1.0)).norm() < 1e-14);
    }
}
