use std::collections::BTreeSet;

use crate::dcda::{DcdaInstance, Forest};
use crate::overlay::NodeId;

/// Per-tree status of a node while trees are being grown.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeState {
    /// In the tree with no capacity left.
    Dead,
    /// In the tree and able to serve at least one more child.
    Fulfilled,
    /// Not in the tree, but next to a fulfilled member.
    Accessible,
    NotAccessible,
}

/// Incrementally maintained node states for every tree, plus the residual
/// capacity shared by all trees.
///
/// Accessible nodes of each tree are kept ordered by `(key, node)`; the key
/// is zero unless a priority order was installed with
/// [`with_priorities`](Self::with_priorities).
#[derive(Clone, Debug)]
pub struct NodeStateTable<'a> {
    instance: &'a DcdaInstance,
    residual: Vec<u32>,
    member: Vec<Vec<bool>>,
    fulfilled_neighbors: Vec<Vec<u32>>,
    accessible: Vec<BTreeSet<(u32, NodeId)>>,
    keys: Vec<Vec<u32>>,
    forest: Forest,
}

impl<'a> NodeStateTable<'a> {
    pub fn new(instance: &'a DcdaInstance) -> Self {
        Self::build(instance, instance.graph().capacities().to_vec(), None)
    }

    /// Same as [`new`](Self::new), with capacities replaced by `residual`.
    pub fn with_capacities(instance: &'a DcdaInstance, residual: Vec<u32>) -> Self {
        Self::build(instance, residual, None)
    }

    /// Accessible sets ordered by `keys[k][v]` (smaller first).
    pub fn with_priorities(instance: &'a DcdaInstance, keys: Vec<Vec<u32>>) -> Self {
        Self::build(instance, instance.graph().capacities().to_vec(), Some(keys))
    }

    fn build(instance: &'a DcdaInstance, residual: Vec<u32>, keys: Option<Vec<Vec<u32>>>) -> Self {
        let n = instance.node_count();
        let k = instance.k();
        let s = instance.source();
        let mut table = NodeStateTable {
            instance,
            residual,
            member: vec![vec![false; n]; k],
            fulfilled_neighbors: vec![vec![0; n]; k],
            accessible: vec![BTreeSet::new(); k],
            keys: keys.unwrap_or_else(|| vec![vec![0; n]; k]),
            forest: Forest::for_instance(instance),
        };
        for tree in 0..k {
            table.member[tree][s] = true;
            if table.residual[s] > 0 {
                table.mark_fulfilled(tree, s);
            }
        }
        table
    }

    pub fn residual(&self, v: NodeId) -> u32 {
        self.residual[v]
    }

    pub fn is_member(&self, tree: usize, v: NodeId) -> bool {
        self.member[tree][v]
    }

    pub fn state(&self, tree: usize, v: NodeId) -> NodeState {
        match (self.member[tree][v], self.residual[v] > 0) {
            (true, true) => NodeState::Fulfilled,
            (true, false) => NodeState::Dead,
            (false, _) if self.fulfilled_neighbors[tree][v] > 0 => NodeState::Accessible,
            (false, _) => NodeState::NotAccessible,
        }
    }

    /// Accessible nodes of `tree` in key order.
    pub fn accessible(&self, tree: usize) -> impl Iterator<Item = NodeId> + '_ {
        self.accessible[tree].iter().map(|&(_, v)| v)
    }

    pub fn first_accessible(&self, tree: usize) -> Option<(u32, NodeId)> {
        self.accessible[tree].first().copied()
    }

    pub fn accessible_count(&self, tree: usize) -> usize {
        self.accessible[tree].len()
    }

    /// Trees that still have an accessible node.
    pub fn open_trees(&self) -> Vec<usize> {
        (0..self.member.len())
            .filter(|&k| !self.accessible[k].is_empty())
            .collect()
    }

    /// Neighbors of `v` that are not accessible in `tree`.
    pub fn not_accessible_neighbors(&self, tree: usize, v: NodeId) -> usize {
        self.instance
            .graph()
            .neighbors(v)
            .iter()
            .filter(|&&w| self.state(tree, w) == NodeState::NotAccessible)
            .count()
    }

    /// Fulfilled neighbor with the most residual capacity, lowest index on ties.
    pub fn best_parent(&self, tree: usize, v: NodeId) -> Option<NodeId> {
        let mut best: Option<NodeId> = None;
        for &p in self.instance.graph().neighbors(v) {
            if self.state(tree, p) == NodeState::Fulfilled
                && best.map_or(true, |b| self.residual[p] > self.residual[b])
            {
                best = Some(p);
            }
        }
        best
    }

    /// Serves `child` from `parent` in `tree` and updates every tree's states.
    pub fn attach(&mut self, tree: usize, child: NodeId, parent: NodeId) {
        debug_assert_eq!(self.state(tree, child), NodeState::Accessible);
        debug_assert_eq!(self.state(tree, parent), NodeState::Fulfilled);
        self.accessible[tree].remove(&(self.keys[tree][child], child));
        self.member[tree][child] = true;
        self.forest.attach(tree, child, parent);
        self.residual[parent] -= 1;
        if self.residual[child] > 0 {
            self.mark_fulfilled(tree, child);
        }
        if self.residual[parent] == 0 {
            for k in 0..self.member.len() {
                if self.member[k][parent] {
                    self.mark_dead(k, parent);
                }
            }
        }
    }

    fn mark_fulfilled(&mut self, tree: usize, v: NodeId) {
        for &w in self.instance.graph().neighbors(v) {
            self.fulfilled_neighbors[tree][w] += 1;
            if !self.member[tree][w] && self.fulfilled_neighbors[tree][w] == 1 {
                self.accessible[tree].insert((self.keys[tree][w], w));
            }
        }
    }

    fn mark_dead(&mut self, tree: usize, v: NodeId) {
        for &w in self.instance.graph().neighbors(v) {
            self.fulfilled_neighbors[tree][w] -= 1;
            if !self.member[tree][w] && self.fulfilled_neighbors[tree][w] == 0 {
                self.accessible[tree].remove(&(self.keys[tree][w], w));
            }
        }
    }

    /// Recomputes all states from the forest and residual capacities and
    /// compares them with the maintained ones.
    pub fn check_consistency(&self) -> Result<(), String> {
        let g = self.instance.graph();
        for tree in 0..self.member.len() {
            let mut expected = BTreeSet::new();
            for v in 0..g.node_count() {
                if self.member[tree][v] != self.forest.contains(tree, v) {
                    return Err(format!("tree {tree}: membership of {v} out of sync"));
                }
                let fulfilled = g
                    .neighbors(v)
                    .iter()
                    .filter(|&&w| self.member[tree][w] && self.residual[w] > 0)
                    .count() as u32;
                if fulfilled != self.fulfilled_neighbors[tree][v] {
                    return Err(format!("tree {tree}: fulfilled-neighbor count of {v} stale"));
                }
                if !self.member[tree][v] && fulfilled > 0 {
                    expected.insert((self.keys[tree][v], v));
                }
            }
            if expected != self.accessible[tree] {
                return Err(format!("tree {tree}: accessible set differs from recomputation"));
            }
        }
        Ok(())
    }

    pub fn forest(&self) -> &Forest {
        &self.forest
    }

    pub fn into_forest(self) -> Forest {
        self.forest
    }
}
