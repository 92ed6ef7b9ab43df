//! Data-capacitated distribution arborescences: `K` trees rooted at a common
//! source, one per data unit, sharing each node's upload capacity.

mod benders;
mod bmatch;
mod bnb;
mod brute;
mod sat;

pub use benders::{levels_to_forest, solve_p1_benders, BendersCut, BendersOutcome, LevelAssignment};
pub use bmatch::{b_matching_feasible, BMatchOutcome, BipartiteBMatchInstance};
pub use bnb::{branch_and_bound, BnbOutcome};
pub use brute::{brute_force, BRUTE_FORCE_MAX_K, BRUTE_FORCE_MAX_NODES};
pub use sat::{sat_to_dcda, Cnf, Literal, SatReduction};

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::overlay::{NodeId, OverlayGraph};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DcdaInstance {
    graph: OverlayGraph,
    source: NodeId,
    k: usize,
}

impl DcdaInstance {
    /// Demands in `graph` are ignored: every node wants one copy of each unit.
    pub fn new(graph: OverlayGraph, source: NodeId, k: usize) -> Result<Self> {
        if source >= graph.node_count() {
            return Err(Error::invalid(format!(
                "source {source} outside graph of {} nodes",
                graph.node_count()
            )));
        }
        if k == 0 {
            return Err(Error::invalid("K must be at least 1"));
        }
        Ok(DcdaInstance { graph, source, k })
    }

    pub fn graph(&self) -> &OverlayGraph {
        &self.graph
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Best conceivable score: every non-source node in every tree.
    pub fn max_score(&self) -> usize {
        self.k * (self.node_count() - 1)
    }

    /// Score as a share of [`max_score`](Self::max_score).
    pub fn ratio(&self, score: usize) -> f64 {
        match self.max_score() {
            0 => 1.0,
            m => score as f64 / m as f64,
        }
    }
}

/// `K` arborescences rooted at the source, stored as parent maps.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Forest {
    source: NodeId,
    parents: Vec<Vec<Option<NodeId>>>,
}

impl Forest {
    /// Every tree holds the source alone.
    pub fn empty(node_count: usize, source: NodeId, k: usize) -> Self {
        Forest {
            source,
            parents: vec![vec![None; node_count]; k],
        }
    }

    pub fn for_instance(instance: &DcdaInstance) -> Self {
        Self::empty(instance.node_count(), instance.source, instance.k)
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn k(&self) -> usize {
        self.parents.len()
    }

    pub fn node_count(&self) -> usize {
        self.parents.first().map_or(0, Vec::len)
    }

    /// Records `parent -> child` in tree `tree`. No validity checks beyond
    /// the child not already being a member.
    pub fn attach(&mut self, tree: usize, child: NodeId, parent: NodeId) {
        debug_assert!(!self.contains(tree, child));
        self.parents[tree][child] = Some(parent);
    }

    pub fn detach(&mut self, tree: usize, child: NodeId) {
        self.parents[tree][child] = None;
    }

    pub fn contains(&self, tree: usize, v: NodeId) -> bool {
        v == self.source || self.parents[tree][v].is_some()
    }

    pub fn parent(&self, tree: usize, v: NodeId) -> Option<NodeId> {
        self.parents[tree][v]
    }

    /// `(child, parent)` pairs of one tree in child order.
    pub fn edges(&self, tree: usize) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.parents[tree]
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|p| (v, p)))
    }

    /// Non-source members of one tree.
    pub fn tree_size(&self, tree: usize) -> usize {
        self.parents[tree].iter().filter(|p| p.is_some()).count()
    }

    /// Number of children of each node in one tree.
    pub fn child_counts(&self, tree: usize) -> Vec<u32> {
        let mut counts = vec![0; self.node_count()];
        for (_, p) in self.edges(tree) {
            counts[p] += 1;
        }
        counts
    }

    /// Children summed over all trees.
    pub fn total_child_counts(&self) -> Vec<u32> {
        let mut counts = vec![0; self.node_count()];
        for k in 0..self.k() {
            for (_, p) in self.edges(k) {
                counts[p] += 1;
            }
        }
        counts
    }

    /// Non-source tree memberships, i.e. the score under the identity QoS.
    pub fn member_count(&self) -> usize {
        (0..self.k()).map(|k| self.tree_size(k)).sum()
    }

    /// Depth of `v` in tree `tree`, `None` when not a member. Assumes the
    /// tree is acyclic.
    pub fn depth(&self, tree: usize, mut v: NodeId) -> Option<usize> {
        if !self.contains(tree, v) {
            return None;
        }
        let mut depth = 0;
        while let Some(p) = self.parents[tree][v] {
            v = p;
            depth += 1;
        }
        Some(depth)
    }

    /// Rootedness, acyclicity, edge membership, and the joint capacity bound.
    pub fn validate(&self, instance: &DcdaInstance) -> Result<()> {
        let g = &instance.graph;
        let n = g.node_count();
        let bad = |m: String| Err(Error::InvalidSolution(m));
        if self.source != instance.source {
            return bad(format!("forest rooted at {} instead of {}", self.source, instance.source));
        }
        if self.k() != instance.k || self.node_count() != n {
            return bad("forest shape does not match the instance".into());
        }
        for k in 0..self.k() {
            if self.parents[k][self.source].is_some() {
                return bad(format!("source has a parent in tree {k}"));
            }
            for (v, p) in self.edges(k) {
                if !g.has_edge(p, v) {
                    return bad(format!("tree {k}: {p}->{v} is not an overlay edge"));
                }
                if !self.contains(k, p) {
                    return bad(format!("tree {k}: parent {p} of {v} is not a member"));
                }
            }
            // Walk each member to the root; more than n hops means a cycle.
            for v in 0..n {
                let mut cur = v;
                let mut hops = 0;
                while let Some(p) = self.parents[k][cur] {
                    cur = p;
                    hops += 1;
                    if hops > n {
                        return bad(format!("tree {k}: cycle through {v}"));
                    }
                }
            }
        }
        for (u, &used) in self.total_child_counts().iter().enumerate() {
            if used > g.capacity(u) {
                return bad(format!("node {u} has {used} children > capacity {}", g.capacity(u)));
            }
        }
        Ok(())
    }

    /// `tree <k> <child> <parent>` lines with 1-based tree numbers.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for k in 0..self.k() {
            for (v, p) in self.edges(k) {
                writeln!(out, "tree {} {v} {p}", k + 1).unwrap();
            }
        }
        out
    }
}

/// Sum of `q(r)` over non-source nodes, where `r` is the number of trees
/// containing the node. The forest is validated first.
pub fn score_forest_with(
    instance: &DcdaInstance,
    forest: &Forest,
    q: impl Fn(usize) -> f64,
) -> Result<f64> {
    forest.validate(instance)?;
    Ok((0..instance.node_count())
        .filter(|&v| v != instance.source)
        .map(|v| q((0..forest.k()).filter(|&k| forest.contains(k, v)).count()))
        .sum())
}

/// Identity quality of service: the number of non-source memberships.
pub fn score_forest(instance: &DcdaInstance, forest: &Forest) -> Result<f64> {
    score_forest_with(instance, forest, |r| r as f64)
}
