//! Exact single-tree solver by level decomposition.
//!
//! A master problem places nodes on levels (hop distances from the source)
//! using only counting constraints. For each pair of consecutive levels a
//! semi-perfect b-matching subproblem then checks whether every node can
//! pick a parent one level up without exceeding capacities. A failing level
//! yields a Hall deficiency set `S`, turned into the cut
//!
//! ```text
//! sum_{v in S} x[v][j]  <=  sum_{u in N(S)} c(u) * x[u][j-1]
//! ```
//!
//! which is valid for every tree and violated by the current placement.

use super::bmatch::{b_matching_feasible, BMatchOutcome, BipartiteBMatchInstance};
use super::{DcdaInstance, Forest};
use crate::error::{Error, Result};
use crate::overlay::NodeId;

/// Node masks are `u64`.
const MAX_NODES: usize = 64;

/// Level of every node: `None` when not in the tree, `Some(j)` with
/// `j >= 1` otherwise. The source is implicitly at level 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelAssignment {
    levels: Vec<Option<usize>>,
}

impl LevelAssignment {
    pub fn new(levels: Vec<Option<usize>>) -> Self {
        LevelAssignment { levels }
    }

    pub fn level(&self, v: NodeId) -> Option<usize> {
        self.levels[v]
    }

    /// The binary variable `x[v][j]`.
    pub fn x(&self, v: NodeId, j: usize) -> bool {
        self.levels[v] == Some(j)
    }

    pub fn max_level(&self) -> usize {
        self.levels.iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn placed(&self) -> usize {
        self.levels.iter().flatten().count()
    }

    pub fn at_level(&self, j: usize) -> Vec<NodeId> {
        (0..self.levels.len()).filter(|&v| self.x(v, j)).collect()
    }

    /// The master's counting constraints: at most `c(s)` nodes on level 1
    /// and, deeper down, no more nodes than the total capacity one level up.
    pub fn satisfies_counting_constraints(&self, instance: &DcdaInstance) -> bool {
        let g = instance.graph();
        if self.levels[instance.source()].is_some() || self.levels.iter().flatten().any(|&j| j == 0) {
            return false;
        }
        (1..=self.max_level()).all(|j| {
            let count = self.at_level(j).len() as u64;
            let supply = if j == 1 {
                g.capacity(instance.source()) as u64
            } else {
                self.at_level(j - 1).iter().map(|&u| g.capacity(u) as u64).sum()
            };
            count <= supply
        })
    }
}

/// `sum_{v in members} x[v][level] <= constant + sum_{u in suppliers} c(u) x[u][level-1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BendersCut {
    pub level: usize,
    pub members: Vec<NodeId>,
    pub suppliers: Vec<NodeId>,
    pub constant: u64,
}

impl BendersCut {
    pub fn is_satisfied(&self, instance: &DcdaInstance, x: &LevelAssignment) -> bool {
        let lhs = self.members.iter().filter(|&&v| x.x(v, self.level)).count() as u64;
        let rhs = self.constant
            + self
                .suppliers
                .iter()
                .filter(|&&u| x.x(u, self.level - 1))
                .map(|&u| instance.graph().capacity(u) as u64)
                .sum::<u64>();
        lhs <= rhs
    }

    /// Hall cut for the deficiency set `set` at `level`.
    fn hall(instance: &DcdaInstance, level: usize, set: &[NodeId]) -> Self {
        let g = instance.graph();
        let s = instance.source();
        let mut neighborhood: Vec<NodeId> = set.iter().flat_map(|&v| g.neighbors(v).iter().copied()).collect();
        neighborhood.sort_unstable();
        neighborhood.dedup();
        let touches_source = neighborhood.contains(&s);
        let (constant, suppliers) = if level == 1 {
            (if touches_source { g.capacity(s) as u64 } else { 0 }, Vec::new())
        } else {
            (0, neighborhood.into_iter().filter(|&u| u != s).collect())
        };
        BendersCut {
            level,
            members: set.to_vec(),
            suppliers,
            constant,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BendersOutcome {
    pub forest: Forest,
    pub score: usize,
    /// Master problems solved.
    pub iterations: usize,
    pub cuts: Vec<BendersCut>,
    pub levels: LevelAssignment,
}

/// Optimal single tree via the level decomposition.
pub fn solve_p1_benders(instance: &DcdaInstance) -> Result<BendersOutcome> {
    if instance.k() != 1 {
        return Err(Error::invalid(format!(
            "level decomposition handles K = 1 only, got K = {}",
            instance.k()
        )));
    }
    let n = instance.node_count();
    if n > MAX_NODES {
        return Err(Error::SizeLimit(format!("n = {n} exceeds {MAX_NODES} nodes")));
    }

    let mut master = Master::new(instance);
    let mut cuts = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let x = master.solve();
        let mut matchings = Vec::new();
        let mut new_cuts = Vec::new();
        for j in 1..=x.max_level() {
            match check_level(instance, &x, j) {
                Ok(pairs) => matchings.push(pairs),
                Err(set) => {
                    let cut = BendersCut::hall(instance, j, &set);
                    debug_assert!(!cut.is_satisfied(instance, &x));
                    new_cuts.push(cut);
                }
            }
        }
        if new_cuts.is_empty() {
            let forest = levels_to_forest(instance, &x, &matchings)?;
            return Ok(BendersOutcome {
                score: forest.member_count(),
                forest,
                iterations,
                cuts,
                levels: x,
            });
        }
        for cut in new_cuts {
            master.add_lifted(instance, &cut);
            cuts.push(cut);
        }
    }
}

/// Semi-perfect b-matching between levels `j - 1` and `j`. Returns
/// `(parent, child)` pairs, or a deficiency set of level-`j` nodes.
fn check_level(
    instance: &DcdaInstance,
    x: &LevelAssignment,
    j: usize,
) -> std::result::Result<Vec<(NodeId, NodeId)>, Vec<NodeId>> {
    let g = instance.graph();
    let left = if j == 1 { vec![instance.source()] } else { x.at_level(j - 1) };
    let right = x.at_level(j);
    let mut edges = Vec::new();
    for (li, &u) in left.iter().enumerate() {
        for (ri, &v) in right.iter().enumerate() {
            if g.has_edge(u, v) {
                edges.push((li, ri));
            }
        }
    }
    let bounds = left.iter().map(|&u| g.capacity(u)).collect();
    let sub = BipartiteBMatchInstance::new(bounds, right.len(), edges).expect("indices in range");
    match b_matching_feasible(&sub) {
        BMatchOutcome::Feasible(pairs) => Ok(pairs.into_iter().map(|(l, r)| (left[l], right[r])).collect()),
        BMatchOutcome::Infeasible(set) => Err(set.into_iter().map(|r| right[r]).collect()),
    }
}

/// Builds the tree from a level assignment and, for each level `j >= 1`,
/// `(parent, child)` pairs matching level `j` into level `j - 1`.
pub fn levels_to_forest(
    instance: &DcdaInstance,
    x: &LevelAssignment,
    matchings: &[Vec<(NodeId, NodeId)>],
) -> Result<Forest> {
    let max = x.max_level();
    if matchings.len() < max {
        return Err(Error::invalid(format!(
            "levels go down to {max} but only {} matchings were given",
            matchings.len()
        )));
    }
    let mut forest = Forest::for_instance(instance);
    for (idx, pairs) in matchings.iter().enumerate().take(max) {
        let j = idx + 1;
        let mut matched = 0;
        for &(p, v) in pairs {
            let parent_level = if p == instance.source() { Some(0) } else { x.level(p) };
            if x.level(v) != Some(j) || parent_level != Some(j - 1) {
                return Err(Error::invalid(format!("pair {p}->{v} does not link level {} to {j}", j - 1)));
            }
            if forest.contains(0, v) {
                return Err(Error::invalid(format!("node {v} matched twice")));
            }
            forest.attach(0, v, p);
            matched += 1;
        }
        if matched != x.at_level(j).len() {
            return Err(Error::invalid(format!("level {j} is not fully matched")));
        }
    }
    forest.validate(instance)?;
    Ok(forest)
}

/// Constraint over bit masks:
/// `popcount(members & at[level]) <= constant + sum c over (suppliers & at[level-1])`.
#[derive(Clone, Debug)]
struct MaskConstraint {
    level: usize,
    members: u64,
    suppliers: u64,
    constant: u64,
}

/// Branch and bound over level placements.
struct Master {
    capacity: Vec<u64>,
    /// Non-source nodes in hop-distance order, with their lowest feasible level.
    order: Vec<(NodeId, usize)>,
    max_level: usize,
    /// Constraints indexed by level.
    by_level: Vec<Vec<MaskConstraint>>,
    /// Nodes whose lowest feasible level is at most `j`, indexed by `j`.
    within: Vec<u64>,
    neighbors: Vec<u64>,
    /// Non-source nodes with positive capacity.
    serving: u64,
    source: NodeId,
    /// Optimum of the previous (less constrained) master.
    ceiling: usize,
}

struct MasterSearch<'m> {
    master: &'m Master,
    at: Vec<u64>,
    undecided: u64,
    levels: Vec<Option<usize>>,
    placed: usize,
    best: Option<(usize, Vec<Option<usize>>)>,
}

impl Master {
    fn new(instance: &DcdaInstance) -> Self {
        let g = instance.graph();
        let n = g.node_count();
        let s = instance.source();
        let dist = g.hop_distances(s);
        let mut order: Vec<(NodeId, usize)> = (0..n)
            .filter(|&v| v != s)
            .filter_map(|v| dist[v].map(|d| (v, d)))
            .collect();
        order.sort_by_key(|&(v, d)| (d, v));
        let max_level = n.saturating_sub(1).max(1);
        let all: u64 = order.iter().fold(0, |m, &(v, _)| m | 1 << v);
        let within = (0..=max_level)
            .map(|j| order.iter().filter(|&&(_, d)| d <= j).fold(0, |m, &(v, _)| m | 1 << v))
            .collect();
        let neighbors = (0..n)
            .map(|u| g.neighbors(u).iter().fold(0u64, |m, &v| m | 1 << v))
            .collect();
        let serving = order
            .iter()
            .filter(|&&(v, _)| g.capacity(v) > 0)
            .fold(0, |m, &(v, _)| m | 1 << v);
        let mut master = Master {
            within,
            neighbors,
            serving,
            source: s,
            capacity: g.capacities().iter().map(|&c| c as u64).collect(),
            ceiling: order.len(),
            order,
            max_level,
            by_level: vec![Vec::new(); max_level + 1],
        };
        master.push(MaskConstraint {
            level: 1,
            members: all,
            suppliers: 0,
            constant: g.capacity(s) as u64,
        });
        for j in 2..=max_level {
            master.push(MaskConstraint {
                level: j,
                members: all,
                suppliers: all,
                constant: 0,
            });
        }
        // a node below level 1 needs a neighbor with capacity one level up
        for &(v, _) in &master.order.clone() {
            let suppliers = g
                .neighbors(v)
                .iter()
                .filter(|&&u| u != s)
                .fold(0u64, |m, &u| m | 1 << u);
            for j in 2..=max_level {
                master.push(MaskConstraint {
                    level: j,
                    members: 1 << v,
                    suppliers,
                    constant: 0,
                });
            }
        }
        master
    }

    fn push(&mut self, c: MaskConstraint) {
        self.by_level[c.level].push(c);
    }

    /// Adds the cut for its own level and the same deficiency set at every
    /// other level, where the corresponding inequality is equally valid.
    fn add_lifted(&mut self, instance: &DcdaInstance, cut: &BendersCut) {
        let mask = |nodes: &[NodeId]| nodes.iter().fold(0u64, |m, &v| m | 1 << v);
        for j in 1..=self.max_level {
            let lifted = if j == cut.level {
                cut.clone()
            } else {
                BendersCut::hall(instance, j, &cut.members)
            };
            self.push(MaskConstraint {
                level: j,
                members: mask(&lifted.members),
                suppliers: mask(&lifted.suppliers),
                constant: lifted.constant,
            });
        }
    }

    fn solve(&mut self) -> LevelAssignment {
        let n = self.capacity.len();
        let mut search = MasterSearch {
            master: self,
            at: vec![0; self.max_level + 1],
            undecided: self.order.iter().fold(0, |m, &(v, _)| m | 1 << v),
            levels: vec![None; n],
            placed: 0,
            best: None,
        };
        search.dfs(0);
        let (value, levels) = search.best.expect("the empty placement is always feasible");
        self.ceiling = value;
        LevelAssignment::new(levels)
    }
}

impl MasterSearch<'_> {
    fn supply(&self, mask: u64) -> u64 {
        let mut total = 0;
        let mut m = mask;
        while m != 0 {
            let v = m.trailing_zeros() as usize;
            total += self.master.capacity[v];
            m &= m - 1;
        }
        total
    }

    /// Whether every constraint can still hold once the undecided nodes are
    /// placed as favourably as possible.
    fn consistent(&self) -> bool {
        (1..=self.master.max_level).all(|j| {
            let available = self.at[j - 1] | (self.undecided & self.master.within[j - 1]);
            self.master.by_level[j].iter().all(|c| {
                let lhs = (c.members & self.at[j]).count_ones() as u64;
                lhs <= c.constant + self.supply(c.suppliers & available)
            })
        })
    }

    /// Undecided nodes joined to the source through placed or undecided
    /// nodes with capacity.
    fn reachable_undecided(&self) -> usize {
        let m = self.master;
        let open = self.placed_mask() | self.undecided;
        let mut reach = if m.capacity[m.source] > 0 { m.neighbors[m.source] & open } else { 0 };
        let mut expanded = 0u64;
        loop {
            let todo = reach & m.serving & !expanded;
            if todo == 0 {
                break;
            }
            expanded |= todo;
            let mut t = todo;
            while t != 0 {
                let u = t.trailing_zeros() as usize;
                reach |= m.neighbors[u] & open;
                t &= t - 1;
            }
        }
        (reach & self.undecided).count_ones() as usize
    }

    fn placed_mask(&self) -> u64 {
        self.at.iter().fold(0, |m, &a| m | a)
    }

    fn dfs(&mut self, idx: usize) {
        let best_value = self.best.as_ref().map(|b| b.0);
        if best_value == Some(self.master.ceiling) {
            return;
        }
        if best_value.is_some_and(|b| self.placed + self.reachable_undecided() <= b) {
            return;
        }
        if idx == self.master.order.len() {
            self.best = Some((self.placed, self.levels.clone()));
            return;
        }
        let (v, lowest) = self.master.order[idx];
        let bit = 1u64 << v;
        self.undecided &= !bit;
        let deepest = self.master.max_level.min(self.master.order.len());
        for j in lowest..=deepest {
            self.at[j] |= bit;
            self.levels[v] = Some(j);
            self.placed += 1;
            if self.consistent() {
                self.dfs(idx + 1);
            }
            self.placed -= 1;
            self.levels[v] = None;
            self.at[j] &= !bit;
        }
        if self.consistent() {
            self.dfs(idx + 1);
        }
        self.undecided |= bit;
    }
}
