//! Exhaustive reference solver for tiny instances.
//!
//! Each tree is enumerated on its own as a full parent function, then trees
//! are combined by their child-count vectors, which is all they share.

use std::collections::HashMap;

use super::{DcdaInstance, Forest};
use crate::error::{Error, Result};
use crate::overlay::NodeId;

pub const BRUTE_FORCE_MAX_NODES: usize = 8;
pub const BRUTE_FORCE_MAX_K: usize = 2;

type Parents = Vec<Option<NodeId>>;

/// Globally optimal forest by enumeration. Refuses instances with more than
/// [`BRUTE_FORCE_MAX_NODES`] nodes or [`BRUTE_FORCE_MAX_K`] trees.
pub fn brute_force(instance: &DcdaInstance) -> Result<(Forest, usize)> {
    let n = instance.node_count();
    if n > BRUTE_FORCE_MAX_NODES || instance.k() > BRUTE_FORCE_MAX_K {
        return Err(Error::SizeLimit(format!(
            "n = {n}, K = {} (limits {BRUTE_FORCE_MAX_NODES}, {BRUTE_FORCE_MAX_K})",
            instance.k()
        )));
    }

    // child-count vector -> largest tree using exactly those counts
    let mut shapes: HashMap<Vec<u32>, (usize, Parents)> = HashMap::new();
    let mut search = TreeSearch {
        instance,
        parents: vec![None; n],
        used: vec![0; n],
        out: &mut shapes,
    };
    search.enumerate(0);

    let mut shapes: Vec<(Vec<u32>, usize, Parents)> =
        shapes.into_iter().map(|(c, (s, p))| (c, s, p)).collect();
    shapes.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let caps = instance.graph().capacities();
    // The last shape is the bare source, which always fits.
    let mut best: (usize, Vec<&Parents>) = (0, vec![&shapes.last().unwrap().2; instance.k()]);
    let mut chosen = Vec::with_capacity(instance.k());
    let mut residual = caps.to_vec();
    combine(&shapes, instance.k(), &mut residual, 0, &mut chosen, &mut best);

    let mut forest = Forest::for_instance(instance);
    for (k, parents) in best.1.iter().enumerate() {
        for (v, p) in parents.iter().enumerate() {
            if let Some(p) = *p {
                forest.attach(k, v, p);
            }
        }
    }
    Ok((forest, best.0))
}

fn combine<'a>(
    shapes: &'a [(Vec<u32>, usize, Parents)],
    remaining: usize,
    residual: &mut Vec<u32>,
    score: usize,
    chosen: &mut Vec<&'a Parents>,
    best: &mut (usize, Vec<&'a Parents>),
) {
    if remaining == 0 {
        if score > best.0 {
            *best = (score, chosen.clone());
        }
        return;
    }
    for (counts, size, parents) in shapes {
        // shapes are sorted by size, so nothing later can do better
        if score + size * remaining <= best.0 {
            break;
        }
        if counts.iter().zip(residual.iter()).any(|(c, r)| c > r) {
            continue;
        }
        for (r, c) in residual.iter_mut().zip(counts) {
            *r -= c;
        }
        chosen.push(parents);
        combine(shapes, remaining - 1, residual, score + size, chosen, best);
        chosen.pop();
        for (r, c) in residual.iter_mut().zip(counts) {
            *r += c;
        }
    }
}

struct TreeSearch<'a> {
    instance: &'a DcdaInstance,
    parents: Parents,
    used: Vec<u32>,
    out: &'a mut HashMap<Vec<u32>, (usize, Parents)>,
}

impl TreeSearch<'_> {
    fn enumerate(&mut self, v: NodeId) {
        let g = self.instance.graph();
        let n = g.node_count();
        if v == n {
            if self.is_arborescence() {
                let size = self.parents.iter().filter(|p| p.is_some()).count();
                let entry = self
                    .out
                    .entry(self.used.clone())
                    .or_insert_with(|| (0, self.parents.clone()));
                if size > entry.0 {
                    *entry = (size, self.parents.clone());
                }
            }
            return;
        }
        self.enumerate(v + 1);
        if v == self.instance.source() {
            return;
        }
        for &p in g.neighbors(v) {
            if self.used[p] < g.capacity(p) {
                self.used[p] += 1;
                self.parents[v] = Some(p);
                self.enumerate(v + 1);
                self.parents[v] = None;
                self.used[p] -= 1;
            }
        }
    }

    fn is_arborescence(&self) -> bool {
        let n = self.parents.len();
        let source = self.instance.source();
        (0..n).all(|v| {
            let mut cur = v;
            let mut hops = 0;
            while let Some(p) = self.parents[cur] {
                cur = p;
                hops += 1;
                if hops > n {
                    return false;
                }
            }
            cur == source || self.parents[v].is_none()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::overlay::OverlayGraph;

    #[test]
    fn star_is_bounded_by_source_fan_out() {
        let g = OverlayGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3)], vec![2, 5, 5, 5], vec![1; 4])
            .unwrap();
        let inst = DcdaInstance::new(g, 0, 1).unwrap();
        let (forest, score) = brute_force(&inst).unwrap();
        assert_eq!(score, 2);
        forest.validate(&inst).unwrap();
        assert_eq!(forest.member_count(), 2);
    }

    #[test]
    fn source_serves_everyone() {
        let n = 6;
        let edges: Vec<_> = (1..n).map(|v| (0, v)).chain([(1, 2), (3, 4)]).collect();
        let mut caps = vec![0; n];
        caps[0] = n as u32 - 1;
        let g = OverlayGraph::from_edges(n, &edges, caps, vec![1; n]).unwrap();
        let inst = DcdaInstance::new(g, 0, 1).unwrap();
        assert_eq!(brute_force(&inst).unwrap().1, n - 1);
    }

    #[test]
    fn two_trees_share_capacity() {
        // s - a - b with c(s) = 2, c(a) = 1: one tree can go deep, the other
        // cannot use a's slot again.
        let g = OverlayGraph::from_edges(3, &[(0, 1), (1, 2)], vec![2, 1, 0], vec![1; 3]).unwrap();
        let inst = DcdaInstance::new(g, 0, 2).unwrap();
        let (forest, score) = brute_force(&inst).unwrap();
        assert_eq!(score, 3);
        forest.validate(&inst).unwrap();
    }

    #[test]
    fn size_guard() {
        let g = OverlayGraph::new(9);
        assert!(matches!(
            brute_force(&DcdaInstance::new(g, 0, 1).unwrap()),
            Err(Error::SizeLimit(_))
        ));
        let g = OverlayGraph::new(3);
        assert!(brute_force(&DcdaInstance::new(g, 0, 3).unwrap()).is_err());
    }
}
