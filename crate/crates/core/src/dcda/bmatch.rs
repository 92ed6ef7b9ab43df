//! Semi-perfect b-matchings: every right vertex matched exactly once, every
//! left vertex `l` used at most `b(l)` times.

use crate::error::{Error, Result};
use crate::flow::FlowNetwork;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteBMatchInstance {
    bounds: Vec<u32>,
    right_count: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BMatchOutcome {
    /// `(left, right)` pairs, one per right vertex, ordered by right vertex.
    Feasible(Vec<(usize, usize)>),
    /// Right vertices `S` with `|S| > sum of b over N(S)`, ascending.
    Infeasible(Vec<usize>),
}

impl BMatchOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, BMatchOutcome::Feasible(_))
    }
}

impl BipartiteBMatchInstance {
    /// `edges` are `(left, right)` index pairs; duplicates are dropped.
    pub fn new(bounds: Vec<u32>, right_count: usize, mut edges: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(l, r)) = edges
            .iter()
            .find(|&&(l, r)| l >= bounds.len() || r >= right_count)
        {
            return Err(Error::invalid(format!("edge ({l}, {r}) outside the bipartition")));
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(BipartiteBMatchInstance {
            bounds,
            right_count,
            edges,
        })
    }

    pub fn bounds(&self) -> &[u32] {
        &self.bounds
    }

    pub fn left_count(&self) -> usize {
        self.bounds.len()
    }

    pub fn right_count(&self) -> usize {
        self.right_count
    }

    /// Sorted, deduplicated `(left, right)` pairs.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Left neighbors of every right vertex in `set`.
    pub fn neighborhood(&self, set: &[usize]) -> Vec<usize> {
        let mut in_set = vec![false; self.right_count];
        for &r in set {
            in_set[r] = true;
        }
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter(|&&(_, r)| in_set[r])
            .map(|&(l, _)| l)
            .collect();
        out.dedup();
        out
    }

    /// Checks that `pairs` is a semi-perfect b-matching of this instance.
    pub fn is_semi_perfect(&self, pairs: &[(usize, usize)]) -> bool {
        let mut left_use = vec![0u32; self.left_count()];
        let mut right_use = vec![0u32; self.right_count];
        for &(l, r) in pairs {
            if self.edges.binary_search(&(l, r)).is_err() {
                return false;
            }
            left_use[l] += 1;
            right_use[r] += 1;
        }
        right_use.iter().all(|&u| u == 1) && left_use.iter().zip(&self.bounds).all(|(u, b)| u <= b)
    }
}

/// Decides existence of a semi-perfect b-matching with one max-flow:
/// source -> left (capacity b), left -> right, right -> sink (capacity 1).
/// On failure the right vertices that can still reach the sink in the
/// residual graph form a Hall violator.
pub fn b_matching_feasible(inst: &BipartiteBMatchInstance) -> BMatchOutcome {
    let nl = inst.left_count();
    let nr = inst.right_count;
    let source = nl + nr;
    let sink = source + 1;
    let mut net = FlowNetwork::new(nl + nr + 2, source, sink);
    for (l, &b) in inst.bounds.iter().enumerate() {
        net.add_arc(source, l, b as u64);
    }
    // Middle arcs never bind; a unit cap would hide Hall sets from the cut.
    let middle = nr as u64;
    let first_middle = net.arcs().len();
    for &(l, r) in &inst.edges {
        net.add_arc(l, nl + r, middle);
    }
    for r in 0..nr {
        net.add_arc(nl + r, sink, 1);
    }
    let flow = net.max_flow();
    if flow.value == nr as u64 {
        let mut pairs: Vec<(usize, usize)> = inst
            .edges
            .iter()
            .enumerate()
            .filter(|&(i, _)| flow.arc_flows[first_middle + i] > 0)
            .map(|(_, &e)| e)
            .collect();
        pairs.sort_by_key(|&(l, r)| (r, l));
        BMatchOutcome::Feasible(pairs)
    } else {
        let cut = net.min_cut_near_sink(&flow);
        let violator = (0..nr).filter(|&r| !cut.source_side[nl + r]).collect();
        BMatchOutcome::Infeasible(violator)
    }
}
