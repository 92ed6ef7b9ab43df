//! Overlay graphs: undirected peer topologies where every node carries an
//! upload capacity and a demand, both counted in integral resource units.

mod format;
mod knn;
mod latency;

pub use format::{read_instance, write_instance, parse_instance, render_instance};
pub use knn::{build_knn_overlay, sample_nodes};
pub use latency::{read_latency_matrix, LatencyMatrix};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Dense node index in `[0, n)`.
pub type NodeId = usize;

/// How [`OverlayGraph::assign_capacities`] draws per-node capacities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CapacityMode {
    /// Independent uniform draw on `{lo, ..., hi}`.
    Uniform { lo: u32, hi: u32 },
    /// Every value of `{lo, ..., hi}` equally often, shuffled, so the mean is
    /// `(lo + hi) / 2` up to integer rounding of the leftover nodes.
    Balanced { lo: u32, hi: u32 },
    Constant(u32),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OverlayGraph {
    adjacency: Vec<Vec<NodeId>>,
    capacity: Vec<u32>,
    demand: Vec<u32>,
}

impl OverlayGraph {
    /// Graph with `n` isolated nodes, zero capacity and zero demand.
    pub fn new(n: usize) -> Self {
        OverlayGraph {
            adjacency: vec![Vec::new(); n],
            capacity: vec![0; n],
            demand: vec![0; n],
        }
    }

    /// Builds a graph from an edge list. Duplicate edges are rejected.
    pub fn from_edges(
        n: usize,
        edges: &[(NodeId, NodeId)],
        capacity: Vec<u32>,
        demand: Vec<u32>,
    ) -> Result<Self> {
        let mut g = OverlayGraph::new(n);
        for &(u, v) in edges {
            if !g.add_edge(u, v)? {
                return Err(Error::invalid(format!("duplicate edge {u}-{v}")));
            }
        }
        g.set_capacities(capacity)?;
        g.set_demands(demand)?;
        Ok(g)
    }

    /// Inserts the undirected edge `u-v`. Returns `false` when it already existed.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<bool> {
        let n = self.node_count();
        if u >= n || v >= n {
            return Err(Error::invalid(format!(
                "edge {u}-{v} references a node outside [0, {n})"
            )));
        }
        if u == v {
            return Err(Error::invalid(format!("self-loop on node {u}")));
        }
        match self.adjacency[u].binary_search(&v) {
            Ok(_) => Ok(false),
            Err(pos) => {
                self.adjacency[u].insert(pos, v);
                let pos = self.adjacency[v].binary_search(&u).unwrap_err();
                self.adjacency[v].insert(pos, u);
                Ok(true)
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Sorted neighbors of `u`.
    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.adjacency[u].len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u < self.node_count() && self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn capacity(&self, u: NodeId) -> u32 {
        self.capacity[u]
    }

    pub fn demand(&self, u: NodeId) -> u32 {
        self.demand[u]
    }

    pub fn capacities(&self) -> &[u32] {
        &self.capacity
    }

    pub fn demands(&self) -> &[u32] {
        &self.demand
    }

    pub fn total_demand(&self) -> u64 {
        self.demand.iter().map(|&d| d as u64).sum()
    }

    pub fn total_capacity(&self) -> u64 {
        self.capacity.iter().map(|&c| c as u64).sum()
    }

    /// Undirected edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.directed_edges().filter(|&(u, v)| u < v)
    }

    /// Both orientations of every edge, sorted by tail then head.
    pub fn directed_edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, adj)| adj.iter().map(move |&v| (u, v)))
    }

    pub fn set_capacity(&mut self, u: NodeId, c: u32) {
        self.capacity[u] = c;
    }

    pub fn set_demand(&mut self, u: NodeId, d: u32) {
        self.demand[u] = d;
    }

    pub fn set_capacities(&mut self, capacity: Vec<u32>) -> Result<()> {
        if capacity.len() != self.node_count() {
            return Err(Error::invalid(format!(
                "expected {} capacities, got {}",
                self.node_count(),
                capacity.len()
            )));
        }
        self.capacity = capacity;
        Ok(())
    }

    pub fn set_demands(&mut self, demand: Vec<u32>) -> Result<()> {
        if demand.len() != self.node_count() {
            return Err(Error::invalid(format!(
                "expected {} demands, got {}",
                self.node_count(),
                demand.len()
            )));
        }
        self.demand = demand;
        Ok(())
    }

    /// Draws every capacity from `mode`; the result depends only on `seed`.
    pub fn assign_capacities(&mut self, mode: CapacityMode, seed: u64) -> Result<()> {
        match mode {
            CapacityMode::Constant(c) => self.capacity.fill(c),
            CapacityMode::Uniform { lo, hi } => {
                if lo > hi {
                    return Err(Error::invalid(format!("capacity range {lo}..{hi} is empty")));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for c in &mut self.capacity {
                    *c = rng.gen_range(lo..=hi);
                }
            }
            CapacityMode::Balanced { lo, hi } => {
                if lo > hi {
                    return Err(Error::invalid(format!("capacity range {lo}..{hi} is empty")));
                }
                let n = self.node_count();
                let width = (hi - lo + 1) as usize;
                let mut values: Vec<u32> = (0..n - n % width).map(|i| lo + (i % width) as u32).collect();
                // leftovers come in pairs from both ends of the range
                let mut j = 0;
                while values.len() + 2 <= n {
                    values.extend([lo + j, hi - j]);
                    j += 1;
                }
                if values.len() < n {
                    values.push(lo + (hi - lo) / 2);
                }
                values.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                self.capacity = values;
            }
        }
        Ok(())
    }

    pub fn assign_demands(&mut self, value: u32) {
        self.demand.fill(value);
    }

    /// Checks symmetry, absence of self-loops and duplicates, and array lengths.
    pub fn validate(&self) -> Result<()> {
        let n = self.node_count();
        if self.capacity.len() != n || self.demand.len() != n {
            return Err(Error::invalid("capacity/demand length mismatch"));
        }
        for (u, adj) in self.adjacency.iter().enumerate() {
            for w in adj.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::invalid(format!("adjacency of {u} not strictly sorted")));
                }
            }
            for &v in adj {
                if v >= n || v == u {
                    return Err(Error::invalid(format!("bad neighbor {v} of {u}")));
                }
                if self.adjacency[v].binary_search(&u).is_err() {
                    return Err(Error::invalid(format!("edge {u}-{v} is not symmetric")));
                }
            }
        }
        Ok(())
    }

    /// Nodes reachable from `root` by hop count, `None` when unreachable.
    pub fn hop_distances(&self, root: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        let mut queue = std::collections::VecDeque::new();
        dist[root] = Some(0);
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &v in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_edge_is_symmetric_and_deduplicated() {
        let mut g = OverlayGraph::new(3);
        assert!(g.add_edge(0, 2).unwrap());
        assert!(!g.add_edge(2, 0).unwrap());
        assert_eq!(g.neighbors(0), &[2]);
        assert_eq!(g.neighbors(2), &[0]);
        assert_eq!(g.edge_count(), 1);
        g.validate().unwrap();
    }

    #[test]
    fn self_loops_and_out_of_range_are_rejected() {
        let mut g = OverlayGraph::new(2);
        assert!(g.add_edge(1, 1).is_err());
        assert!(g.add_edge(0, 2).is_err());
    }

    #[test]
    fn constant_capacity() {
        let mut g = OverlayGraph::new(10);
        g.assign_capacities(CapacityMode::Constant(3), 0).unwrap();
        assert!(g.capacities().iter().all(|&c| c == 3));
        assert_eq!(g.total_capacity() as f64 / 10.0, 3.0);
    }

    #[test]
    fn uniform_capacity_is_seeded_and_in_range() {
        let mut a = OverlayGraph::new(200);
        let mut b = OverlayGraph::new(200);
        let mode = CapacityMode::Uniform { lo: 2, hi: 4 };
        a.assign_capacities(mode, 17).unwrap();
        b.assign_capacities(mode, 17).unwrap();
        assert_eq!(a.capacities(), b.capacities());
        assert!(a.capacities().iter().all(|c| (2..=4).contains(c)));
        for v in 2..=4 {
            assert!(a.capacities().contains(&v));
        }

        let mut wide = OverlayGraph::new(300);
        wide.assign_capacities(CapacityMode::Uniform { lo: 0, hi: 6 }, 3).unwrap();
        assert!(wide.capacities().iter().all(|&c| c <= 6));
        assert!(wide.capacities().contains(&0) && wide.capacities().contains(&6));
    }

    #[test]
    fn balanced_capacity_has_exact_mean() {
        for n in [1, 2, 99, 100, 101, 1000] {
            let mut g = OverlayGraph::new(n);
            g.assign_capacities(CapacityMode::Balanced { lo: 2, hi: 4 }, n as u64).unwrap();
            assert_eq!(g.total_capacity(), 3 * n as u64, "n = {n}");
            assert!(g.capacities().iter().all(|c| (2..=4).contains(c)));
        }
        let mut g = OverlayGraph::new(300);
        g.assign_capacities(CapacityMode::Balanced { lo: 2, hi: 4 }, 1).unwrap();
        for v in 2..=4 {
            assert_eq!(g.capacities().iter().filter(|&&c| c == v).count(), 100);
        }
    }

    #[test]
    fn empty_capacity_range_is_invalid() {
        let mut g = OverlayGraph::new(2);
        assert!(g.assign_capacities(CapacityMode::Uniform { lo: 4, hi: 2 }, 0).is_err());
        assert!(g.assign_capacities(CapacityMode::Balanced { lo: 4, hi: 2 }, 0).is_err());
    }

    #[test]
    fn demands() {
        let mut g = OverlayGraph::new(4);
        g.assign_demands(3);
        assert_eq!(g.demands(), &[3, 3, 3, 3]);
        assert_eq!(g.total_demand(), 12);
    }
}
