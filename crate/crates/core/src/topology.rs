//! Undirected interaction graphs between computing threads.
//!
//! A [`Graph`] stores sorted neighbour lists; the dense adjacency matrix and
//! the Laplacian `L = D - A` are materialized on demand. The algebraic
//! connectivity (second-smallest Laplacian eigenvalue) is computed with a
//! dense symmetric eigensolver, which is exact enough for the few hundred
//! vertices these experiments use.

use std::collections::VecDeque;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalues at or below this are treated as zero.
pub const CONNECTIVITY_TOL: f64 = 1e-10;

/// Default cap on whole-graph resamples in [`erdos_renyi_connected`].
pub const DEFAULT_MAX_ATTEMPTS: u32 = 10_000;

/// Undirected simple graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    neighbors: Vec<Vec<usize>>,
}

/// JSON form: `{"n": N, "edges": [[i, j], ...]}` with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

impl Graph {
    /// Builds a graph from an undirected edge list. Rejects self loops,
    /// out-of-range endpoints and duplicate edges; does not require
    /// connectivity (see [`Graph::require_connected`]).
    pub fn from_edges(n: usize, edges: &[[usize; 2]]) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(n));
        }
        let mut neighbors = vec![Vec::new(); n];
        for &[i, j] in edges {
            if i == j || i >= n || j >= n || neighbors[i].contains(&j) {
                return Err(Error::InvalidEdge(i, j));
            }
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Graph { neighbors })
    }

    pub fn require_connected(self) -> Result<Self> {
        if is_connected(&self) {
            Ok(self)
        } else {
            Err(Error::Disconnected { lambda2: 0.0 })
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(i, j)` pairs with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| [i, j]))
            .collect()
    }

    /// Dense 0/1 adjacency matrix.
    pub fn adjacency(&self) -> Vec<Vec<u8>> {
        let n = self.n_vertices();
        let mut a = vec![vec![0u8; n]; n];
        for (i, list) in self.neighbors.iter().enumerate() {
            for &j in list {
                a[i][j] = 1;
            }
        }
        a
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            n: self.n_vertices(),
            edges: self.edges(),
        }
    }

    /// Parses the JSON form; the graph must be connected.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile =
            serde_json::from_str(text).map_err(|e| Error::param("graph", e.to_string()))?;
        Graph::try_from(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("graph serialization cannot fail")
    }
}

impl TryFrom<GraphFile> for Graph {
    type Error = Error;

    fn try_from(file: GraphFile) -> Result<Self> {
        if let Some(&[i, j]) = file.edges.iter().find(|[i, j]| i >= j) {
            return Err(Error::InvalidEdge(i, j));
        }
        Graph::from_edges(file.n, &file.edges)?.require_connected()
    }
}

pub fn complete_graph(n: usize) -> Result<Graph> {
    let edges: Vec<_> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| [i, j]))
        .collect();
    Graph::from_edges(n, &edges)
}

/// Path `0 - 1 - ... - (n-1)`.
pub fn path_graph(n: usize) -> Result<Graph> {
    let edges: Vec<_> = (1..n).map(|j| [j - 1, j]).collect();
    Graph::from_edges(n, &edges)
}

/// Star centred on vertex 0.
pub fn star_graph(n: usize) -> Result<Graph> {
    let edges: Vec<_> = (1..n).map(|j| [0, j]).collect();
    Graph::from_edges(n, &edges)
}

/// Samples `G(n, p)` until the draw is connected. Returns the graph and the
/// number of draws it took.
///
/// Each unordered pair is linked independently with probability `p`. A
/// disconnected draw is discarded whole, so the result is distributed as
/// `G(n, p)` conditioned on connectivity.
pub fn erdos_renyi_connected<R: Rng + ?Sized>(
    n: usize,
    p: f64,
    rng: &mut R,
) -> Result<(Graph, u32)> {
    erdos_renyi_connected_with(n, p, DEFAULT_MAX_ATTEMPTS, rng)
}

pub fn erdos_renyi_connected_with<R: Rng + ?Sized>(
    n: usize,
    p: f64,
    max_attempts: u32,
    rng: &mut R,
) -> Result<(Graph, u32)> {
    if n < 2 {
        return Err(Error::InvalidSize(n));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param("p", format!("{p} is not in (0, 1]")));
    }
    let mut edges = Vec::new();
    for attempt in 1..=max_attempts {
        edges.clear();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    edges.push([i, j]);
                }
            }
        }
        let g = Graph::from_edges(n, &edges)?;
        if is_connected(&g) {
            return Ok((g, attempt));
        }
    }
    Err(Error::ConnectivityFailure {
        n,
        p,
        attempts: max_attempts,
    })
}

/// Laplacian `L = D - A` as a row-major `n x n` matrix.
pub fn laplacian(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.n_vertices();
    let mut l = vec![vec![0.0; n]; n];
    for (i, row) in l.iter_mut().enumerate() {
        row[i] = g.degree(i) as f64;
        for &j in g.neighbors(i) {
            row[j] = -1.0;
        }
    }
    l
}

/// Laplacian eigenvalues in ascending order.
pub fn laplacian_spectrum(g: &Graph) -> Vec<f64> {
    let n = g.n_vertices();
    let l = laplacian(g);
    let m = DMatrix::from_fn(n, n, |i, j| l[i][j]);
    let mut values: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Second-smallest Laplacian eigenvalue.
///
/// Fails with [`Error::Disconnected`] (carrying the computed value) when it is
/// not above [`CONNECTIVITY_TOL`].
pub fn algebraic_connectivity(g: &Graph) -> Result<f64> {
    let lambda2 = laplacian_spectrum(g)[1];
    if lambda2 > CONNECTIVITY_TOL {
        Ok(lambda2)
    } else {
        Err(Error::Disconnected { lambda2 })
    }
}

pub fn max_degree(g: &Graph) -> usize {
    g.neighbors.iter().map(Vec::len).max().unwrap_or(0)
}

/// Breadth-first search from vertex 0.
pub fn is_connected(g: &Graph) -> bool {
    let n = g.n_vertices();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(i) = queue.pop_front() {
        for &j in g.neighbors(i) {
            if !seen[j] {
                seen[j] = true;
                reached += 1;
                queue.push_back(j);
            }
        }
    }
    reached == n
}
