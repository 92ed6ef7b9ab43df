//! Depth-first branch and bound over forests.
//!
//! Trees are grown one after another. Within a tree, members are expanded in
//! the order they joined, and for each neighbor of the member being expanded
//! the search decides whether it becomes a child there. Every forest is
//! reached along exactly one decision path. Trees are kept in non-increasing
//! size order, which removes the symmetry between interchangeable data units.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use super::{DcdaInstance, Forest};
use crate::flow::FlowNetwork;
use crate::heuristics::{self, GaConfig};
use crate::overlay::NodeId;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BnbOutcome {
    pub forest: Forest,
    pub score: usize,
    /// The search tree was exhausted, so `score` is optimal.
    pub proven_optimal: bool,
    /// Search nodes visited.
    pub nodes: u64,
}

/// Greedy runs used to seed the incumbent.
const WARM_START_RUNS: u64 = 8;

const WARM_START_GA: GaConfig = GaConfig {
    population: 40,
    generations: 40,
    mutation_rate: 0.1,
    tournament: 2,
};

/// Cap on remembered tree-boundary states.
const MEMO_LIMIT: usize = 1 << 22;

/// Exact solver. With a `budget`, returns the best forest found when time
/// runs out, flagged as not proven optimal.
pub fn branch_and_bound(instance: &DcdaInstance, budget: Option<Duration>) -> BnbOutcome {
    let start = Instant::now();
    let mut best_forest = Forest::for_instance(instance);
    let mut best_score = 0;
    let candidates = (0..WARM_START_RUNS)
        .map(|seed| heuristics::greedy(instance, seed))
        .chain(std::iter::once_with(|| heuristics::genetic(instance, &WARM_START_GA, 0)));
    for f in candidates {
        if f.member_count() > best_score {
            best_score = f.member_count();
            best_forest = f;
        }
    }

    let n = instance.node_count();
    let k = instance.k();
    let source = instance.source();
    let mut member = vec![vec![false; n]; k];
    for m in &mut member {
        m[source] = true;
    }
    let mut search = Search {
        instance,
        residual: instance.graph().capacities().to_vec(),
        member,
        queue: vec![vec![source]; k],
        forest: Forest::for_instance(instance),
        score: 0,
        best_score,
        best_forest,
        deadline: budget.map(|b| start + b),
        timed_out: false,
        nodes: 0,
        stamp: vec![0; n],
        epoch: 0,
        bfs: Vec::with_capacity(n),
        slots: vec![0; n],
        fresh_slots: vec![0; n],
        seen: HashSet::new(),
        ceiling: 0,
    };
    search.ceiling = search.matching_bound(0, n.saturating_sub(1));
    if search.best_score < search.ceiling {
        search.dfs(0, 0, 0);
    }
    BnbOutcome {
        forest: search.best_forest,
        score: search.best_score,
        proven_optimal: !search.timed_out,
        nodes: search.nodes,
    }
}

struct Search<'a> {
    instance: &'a DcdaInstance,
    residual: Vec<u32>,
    member: Vec<Vec<bool>>,
    /// Members of each tree in join order.
    queue: Vec<Vec<NodeId>>,
    forest: Forest,
    score: usize,
    best_score: usize,
    best_forest: Forest,
    deadline: Option<Instant>,
    timed_out: bool,
    nodes: u64,
    // scratch for the bound
    stamp: Vec<u64>,
    epoch: u64,
    bfs: Vec<NodeId>,
    slots: Vec<u32>,
    fresh_slots: Vec<u32>,
    /// `(tree, previous tree size, residual capacities)` at the start of a
    /// tree. The rest of the search depends on nothing else, and the score so
    /// far is the capacity already spent, so a repeated state is skipped.
    seen: HashSet<Box<[u32]>>,
    /// Upper bound on the optimum, known up front.
    ceiling: usize,
}

/// Outcome of growing one tree as far as capacities and reachability allow.
struct Reach {
    nodes: usize,
    capacity: u64,
}

impl Search<'_> {
    fn tree_size(&self, k: usize) -> usize {
        self.queue[k].len() - 1
    }

    /// `tree`, `pos` and `next` identify the pending decision: neighbor
    /// `next` of member `queue[tree][pos]`.
    fn dfs(&mut self, mut tree: usize, mut pos: usize, mut next: usize) {
        if self.timed_out {
            return;
        }
        self.nodes += 1;
        if self.nodes % 4096 == 0 {
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                    self.timed_out = true;
                    return;
                }
            }
        }
        if self.score > self.best_score {
            self.best_score = self.score;
            self.best_forest = self.forest.clone();
            if self.best_score >= self.ceiling {
                return;
            }
        }

        let g = self.instance.graph();
        let k_total = self.instance.k();
        let (parent, child) = loop {
            if tree == k_total {
                return;
            }
            if pos == self.queue[tree].len() {
                if tree > 0 && self.tree_size(tree) > self.tree_size(tree - 1) {
                    return;
                }
                tree += 1;
                pos = 0;
                next = 0;
                if tree < k_total {
                    if !self.first_visit(tree) {
                        return;
                    }
                    let cap = self.tree_size(tree - 1);
                    if self.score + self.matching_bound(tree, cap) <= self.best_score {
                        return;
                    }
                }
                continue;
            }
            let p = self.queue[tree][pos];
            let nbrs = g.neighbors(p);
            if self.residual[p] == 0 || next >= nbrs.len() {
                pos += 1;
                next = 0;
                continue;
            }
            let w = nbrs[next];
            if self.member[tree][w] {
                next += 1;
                continue;
            }
            break (p, w);
        };

        if self.upper_bound(tree, pos, next) <= self.best_score {
            return;
        }

        self.residual[parent] -= 1;
        self.member[tree][child] = true;
        self.queue[tree].push(child);
        self.forest.attach(tree, child, parent);
        self.score += 1;

        self.dfs(tree, pos, next + 1);

        self.score -= 1;
        self.forest.detach(tree, child);
        self.queue[tree].pop();
        self.member[tree][child] = false;
        self.residual[parent] += 1;

        self.dfs(tree, pos, next + 1);
    }

    /// Bound on what the still empty trees `tree..K` can add, each holding
    /// at most `cap` nodes besides the source. Every new member needs a
    /// parent next to it, reachable through nodes with spare capacity, and
    /// parents are limited by their residual capacity; a node may use the
    /// same parent in every tree.
    fn matching_bound(&self, tree: usize, cap: usize) -> usize {
        let g = self.instance.graph();
        let n = g.node_count();
        let s = self.instance.source();
        let trees = (self.instance.k() - tree) as u64;
        let mut reach = vec![false; n];
        reach[s] = true;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            if self.residual[v] == 0 {
                continue;
            }
            for &w in g.neighbors(v) {
                if !reach[w] {
                    reach[w] = true;
                    stack.push(w);
                }
            }
        }
        // 0 super source, 1 sink, 2 source, 3.. children, 3+n.. parents
        let mut net = FlowNetwork::new(3 + 2 * n, 0, 1);
        net.add_arc(0, 2, trees * cap as u64);
        for v in (0..n).filter(|&v| v != s && reach[v]) {
            net.add_arc(2, 3 + v, trees);
            for &u in g.neighbors(v) {
                if reach[u] && self.residual[u] > 0 {
                    net.add_arc(3 + v, 3 + n + u, trees);
                }
            }
        }
        for u in 0..n {
            if self.residual[u] > 0 && reach[u] {
                net.add_arc(3 + n + u, 1, self.residual[u] as u64);
            }
        }
        net.max_flow().value as usize
    }

    fn first_visit(&mut self, tree: usize) -> bool {
        let mut key = Vec::with_capacity(self.residual.len() + 2);
        key.push(tree as u32);
        key.push(self.tree_size(tree - 1) as u32);
        key.extend_from_slice(&self.residual);
        let key = key.into_boxed_slice();
        if self.seen.contains(&key) {
            return false;
        }
        if self.seen.len() < MEMO_LIMIT {
            self.seen.insert(key);
        }
        true
    }

    fn upper_bound(&mut self, tree: usize, pos: usize, next: usize) -> usize {
        let k_total = self.instance.k();
        let size = self.tree_size(tree);

        let mut slots = std::mem::take(&mut self.slots);
        slots.fill(0);
        let open: Vec<(NodeId, usize)> = self.queue[tree][pos..]
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, if i == 0 { next } else { 0 }))
            .collect();
        let cur = self.reach(tree, &open, &mut slots);
        let mut final_size = size + cur.nodes.min(cur.capacity as usize);
        if tree > 0 {
            final_size = final_size.min(self.tree_size(tree - 1));
        }
        let mut total_add = final_size.saturating_sub(size);

        let future = k_total - tree - 1;
        if future > 0 {
            let mut fresh = std::mem::take(&mut self.fresh_slots);
            fresh.fill(0);
            let source = self.instance.source();
            let f = self.reach(tree + 1, &[(source, 0)], &mut fresh);
            let mut prev = final_size;
            let per_tree = f.nodes.min(f.capacity as usize);
            for _ in 0..future {
                prev = prev.min(per_tree);
                total_add += prev;
            }
            for (s, f) in slots.iter_mut().zip(&fresh) {
                *s += f * future as u32;
            }
            self.fresh_slots = fresh;
        }

        let global: usize = self
            .residual
            .iter()
            .zip(&slots)
            .map(|(&r, &s)| r.min(s) as usize)
            .sum();
        self.slots = slots;
        self.score + total_add.min(global)
    }

    /// Nodes that could still join `tree`, grown from the open members with
    /// spare capacity (each paired with the first neighbor index it may still
    /// adopt). Adds to `slots[u]` the number of such nodes adjacent to a
    /// potential parent `u`.
    fn reach(&mut self, tree: usize, open: &[(NodeId, usize)], slots: &mut [u32]) -> Reach {
        let g = self.instance.graph();
        self.epoch += 1;
        let epoch = self.epoch;
        let member = &self.member[tree];
        let mut nodes = 0;
        let mut capacity = 0u64;
        self.bfs.clear();
        for &(v, _) in open {
            capacity += self.residual[v] as u64;
        }
        for &(v, from) in open {
            if self.residual[v] == 0 {
                continue;
            }
            for &w in &g.neighbors(v)[from..] {
                if member[w] {
                    continue;
                }
                slots[v] += 1;
                if self.stamp[w] != epoch {
                    self.stamp[w] = epoch;
                    nodes += 1;
                    capacity += self.residual[w] as u64;
                    if self.residual[w] > 0 {
                        self.bfs.push(w);
                    }
                }
            }
        }
        let mut head = 0;
        while head < self.bfs.len() {
            let v = self.bfs[head];
            head += 1;
            for &w in g.neighbors(v) {
                if member[w] {
                    continue;
                }
                slots[v] += 1;
                if self.stamp[w] != epoch {
                    self.stamp[w] = epoch;
                    nodes += 1;
                    capacity += self.residual[w] as u64;
                    if self.residual[w] > 0 {
                        self.bfs.push(w);
                    }
                }
            }
        }
        Reach { nodes, capacity }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dcda::brute_force;
    use crate::overlay::OverlayGraph;

    #[test]
    fn unreachable_component_stays_out() {
        // 0-1-2 and a separate 3-4
        let g = OverlayGraph::from_edges(5, &[(0, 1), (1, 2), (3, 4)], vec![3; 5], vec![1; 5])
            .unwrap();
        let inst = DcdaInstance::new(g, 0, 2).unwrap();
        let out = branch_and_bound(&inst, None);
        assert!(out.proven_optimal);
        assert_eq!(out.score, 4);
        for k in 0..2 {
            assert!(!out.forest.contains(k, 3) && !out.forest.contains(k, 4));
        }
        out.forest.validate(&inst).unwrap();
    }

    #[test]
    fn matches_brute_force_on_a_hand_instance() {
        let g = OverlayGraph::from_edges(
            6,
            &[(0, 1), (0, 2), (1, 3), (2, 3), (3, 4), (4, 5), (2, 5)],
            vec![1, 2, 1, 1, 1, 0],
            vec![1; 6],
        )
        .unwrap();
        for k in 1..=2 {
            let inst = DcdaInstance::new(g.clone(), 0, k).unwrap();
            let exact = branch_and_bound(&inst, None);
            assert!(exact.proven_optimal);
            assert_eq!(exact.score, brute_force(&inst).unwrap().1);
            exact.forest.validate(&inst).unwrap();
        }
    }

    #[test]
    fn zero_budget_still_returns_a_valid_forest() {
        let g = OverlayGraph::from_edges(3, &[(0, 1), (1, 2)], vec![1, 1, 1], vec![1; 3]).unwrap();
        let inst = DcdaInstance::new(g, 0, 3).unwrap();
        let out = branch_and_bound(&inst, Some(Duration::ZERO));
        out.forest.validate(&inst).unwrap();
        assert_eq!(out.score, out.forest.member_count());
    }
}
