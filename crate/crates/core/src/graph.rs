//! Plain undirected simple graphs.
//!
//! `SimpleGraph` is the cross-sectional representation shared by the static
//! samplers, the statistics module, and simulation outputs. Edges are stored
//! canonically as `(min, max)` pairs over 0-based contiguous vertex ids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Order a pair as `(min, max)`.
#[inline]
pub fn canonical(u: u32, v: u32) -> (u32, u32) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Number of unordered vertex pairs among `n` vertices.
#[inline]
pub fn pair_count(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimpleGraph {
    n_vertices: usize,
    edges: Vec<(u32, u32)>,
}

impl SimpleGraph {
    /// Build a graph from an edge list, rejecting self-loops, duplicate
    /// edges, and out-of-range vertex ids. Edges are canonicalized.
    pub fn new(n_vertices: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut canon: Vec<(u32, u32)> = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::domain(format!("self-loop at vertex {u}")));
            }
            if u as usize >= n_vertices || v as usize >= n_vertices {
                return Err(Error::domain(format!(
                    "edge ({u}, {v}) out of range for {n_vertices} vertices"
                )));
            }
            canon.push(canonical(u, v));
        }
        let mut sorted = canon.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::domain(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(SimpleGraph {
            n_vertices,
            edges: canon,
        })
    }

    pub fn empty(n_vertices: usize) -> Self {
        SimpleGraph {
            n_vertices,
            edges: Vec::new(),
        }
    }

    /// Build from edges already known to be canonical and duplicate-free
    /// (samplers and the simulator maintain this invariant themselves).
    pub(crate) fn from_canonical_edges(n_vertices: usize, edges: Vec<(u32, u32)>) -> Self {
        debug_assert!(edges.iter().all(|&(u, v)| u < v && (v as usize) < n_vertices));
        SimpleGraph { n_vertices, edges }
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.n_vertices];
        for &(u, v) in &self.edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        deg
    }

    /// Neighbor lists sorted by vertex id.
    pub fn adjacency_lists(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.n_vertices];
        for &(u, v) in &self.edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }
}
