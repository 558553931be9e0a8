//! Undirected agent networks and their Laplacian spectra.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;

/// Relative tolerance used to decide `λ₂ > 0`.
pub const DEFAULT_CONNECTIVITY_TOL: f64 = 1e-9;

/// Undirected, unweighted communication graph without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    adjacency: Vec<Vec<u8>>,
    neighbors: Vec<Vec<usize>>,
}

/// Laplacian, degree matrix and sorted Laplacian spectrum of a [`Network`].
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub laplacian: DMatrix<f64>,
    pub degree: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    /// Second-smallest eigenvalue; `0.0` for a single node.
    pub lambda2: f64,
    /// `false` when λ₂ is not above [`DEFAULT_CONNECTIVITY_TOL`], including `N = 1`.
    pub connected: bool,
}

/// Validates a 0/1 adjacency matrix and derives neighbor lists.
pub fn build_network(adjacency: &[Vec<i64>]) -> Result<Network> {
    let n = adjacency.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    for (row, entries) in adjacency.iter().enumerate() {
        if entries.len() != n {
            return Err(Error::NotSquare { rows: n, row, len: entries.len() });
        }
        for (j, &value) in entries.iter().enumerate() {
            if value != 0 && value != 1 {
                return Err(Error::NotBinary { i: row, j, value });
            }
        }
    }
    for i in 0..n {
        if adjacency[i][i] != 0 {
            return Err(Error::SelfLoop(i));
        }
        for j in (i + 1)..n {
            if adjacency[i][j] != adjacency[j][i] {
                return Err(Error::NonSymmetric { i, j });
            }
        }
    }
    let adjacency: Vec<Vec<u8>> = adjacency.iter().map(|row| row.iter().map(|&v| v as u8).collect()).collect();
    let neighbors =
        adjacency.iter().map(|row| row.iter().enumerate().filter(|(_, &v)| v == 1).map(|(j, _)| j).collect()).collect();
    Ok(Network { adjacency, neighbors })
}

impl Network {
    /// Graph on `n` nodes with the given undirected edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![vec![0i64; n]; n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch(format!("edge ({i}, {j}) out of range for {n} nodes")));
            }
            adj[i][j] = 1;
            adj[j][i] = 1;
        }
        build_network(&adj)
    }

    /// Ring `0 - 1 - ... - (n-1) - 0`.
    pub fn cycle(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).filter(|(i, j)| i != j).collect();
        Self::from_edges(n, &edges)
    }

    pub fn n_agents(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, agent: usize) -> &[usize] {
        &self.neighbors[agent]
    }

    pub fn adjacency(&self) -> &[Vec<u8>] {
        &self.adjacency
    }

    pub fn is_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i][j] == 1
    }

    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let n = self.n_agents();
        DMatrix::from_fn(n, n, |i, j| f64::from(self.adjacency[i][j]))
    }

    pub fn degree_matrix(&self) -> DMatrix<f64> {
        let n = self.n_agents();
        DMatrix::from_fn(n, n, |i, j| if i == j { self.neighbors[i].len() as f64 } else { 0.0 })
    }

    /// `𝓛 = 𝓓 − 𝓐`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        self.degree_matrix() - self.adjacency_matrix()
    }

    pub fn as_rows(&self) -> Vec<Vec<i64>> {
        self.adjacency.iter().map(|r| r.iter().map(|&v| i64::from(v)).collect()).collect()
    }
}

pub fn spectral_data(net: &Network) -> Result<SpectralData> {
    let laplacian = net.laplacian();
    let degree = net.degree_matrix();
    let eigenvalues = symmetric_eigen(&laplacian)?.values;
    let lambda2 = eigenvalues.get(1).copied().unwrap_or(0.0);
    let connected = eigenvalues.len() > 1 && lambda2_exceeds(&eigenvalues, DEFAULT_CONNECTIVITY_TOL);
    Ok(SpectralData { laplacian, degree, eigenvalues, lambda2, connected })
}

fn lambda2_exceeds(eigenvalues: &[f64], tol: f64) -> bool {
    let largest = eigenvalues.last().copied().unwrap_or(0.0);
    eigenvalues.get(1).is_some_and(|&l2| l2 > tol * largest.max(1.0))
}

/// `λ₂ > tol · max(1, λ_max)`; a single node is never connected.
pub fn is_connected(net: &Network, tol: f64) -> bool {
    if net.n_agents() < 2 {
        return false;
    }
    match symmetric_eigen(&net.laplacian()) {
        Ok(eig) => lambda2_exceeds(&eig.values, tol),
        Err(_) => false,
    }
}
