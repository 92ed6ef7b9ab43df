//! Polynomial-time heuristics for distribution forests.
//!
//! All of them grow trees one attachment at a time on top of a
//! [`NodeStateTable`]; they differ in how the next node to serve is picked.

mod ga;
mod state;

pub use ga::{genetic, GaConfig, GaGenome};
pub use state::{NodeState, NodeStateTable};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dcda::{DcdaInstance, Forest};
use crate::overlay::{NodeId, OverlayGraph};

/// Which heuristic to run; also the RNG stream id of each algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Heuristic {
    Greedy,
    Random,
    Prefixed,
    Genetic,
}

impl Heuristic {
    fn stream(self) -> u64 {
        match self {
            Heuristic::Greedy => 1,
            Heuristic::Random => 2,
            Heuristic::Prefixed => 3,
            Heuristic::Genetic => 4,
        }
    }
}

pub(crate) fn rng_for(seed: u64, algo: Heuristic) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(algo.stream());
    rng
}

#[derive(Clone, Copy)]
enum Pick {
    Score,
    Uniform,
}

/// Score-driven greedy construction. Each step picks a random tree that
/// still has accessible nodes, serves the accessible node that could itself
/// reach the most not-yet-accessible neighbors, and hangs it below the
/// fulfilled neighbor with the most spare capacity.
pub fn greedy(instance: &DcdaInstance, seed: u64) -> Forest {
    let mut rng = rng_for(seed, Heuristic::Greedy);
    grow(NodeStateTable::new(instance), Pick::Score, &mut rng, |_| {})
}

/// Like [`greedy`], but the node to serve is drawn uniformly.
pub fn random_variant(instance: &DcdaInstance, seed: u64) -> Forest {
    let mut rng = rng_for(seed, Heuristic::Random);
    grow(NodeStateTable::new(instance), Pick::Uniform, &mut rng, |_| {})
}

/// Greedy with an observer called after every attachment.
pub fn greedy_traced(
    instance: &DcdaInstance,
    seed: u64,
    observe: impl FnMut(&NodeStateTable<'_>),
) -> Forest {
    let mut rng = rng_for(seed, Heuristic::Greedy);
    grow(NodeStateTable::new(instance), Pick::Score, &mut rng, observe)
}

fn grow(
    mut table: NodeStateTable<'_>,
    pick: Pick,
    rng: &mut ChaCha8Rng,
    mut observe: impl FnMut(&NodeStateTable<'_>),
) -> Forest {
    loop {
        let open = table.open_trees();
        if open.is_empty() {
            break;
        }
        let tree = open[rng.gen_range(0..open.len())];
        let child = match pick {
            Pick::Score => select_by_score(&table, tree),
            Pick::Uniform => {
                let i = rng.gen_range(0..table.accessible_count(tree));
                table.accessible(tree).nth(i).unwrap()
            }
        };
        let parent = table
            .best_parent(tree, child)
            .expect("accessible node has a fulfilled neighbor");
        table.attach(tree, child, parent);
        observe(&table);
    }
    table.into_forest()
}

/// `min(not-accessible neighbors, residual capacity)`, maximal, lowest index
/// on ties.
fn select_by_score(table: &NodeStateTable<'_>, tree: usize) -> NodeId {
    let mut best = None;
    let mut best_score = 0;
    for v in table.accessible(tree) {
        let score = table
            .not_accessible_neighbors(tree, v)
            .min(table.residual(v) as usize);
        if best.is_none() || score > best_score || (score == best_score && Some(v) < best) {
            best = Some(v);
            best_score = score;
        }
    }
    best.expect("tree has an accessible node")
}

/// Splits `c` into `k` budgets: `c / k` each, the remainder going one unit at
/// a time to the first trees.
pub fn split_capacity(c: u32, k: usize) -> Vec<u32> {
    let k32 = k as u32;
    (0..k32).map(|i| c / k32 + u32::from(i < c % k32)).collect()
}

/// Every node commits a fixed share of its capacity to each tree up front,
/// then each tree is built by [`greedy`] on its own budget.
pub fn prefixed_variant(instance: &DcdaInstance, seed: u64) -> Forest {
    let g = instance.graph();
    let k = instance.k();
    let splits: Vec<Vec<u32>> = g.capacities().iter().map(|&c| split_capacity(c, k)).collect();
    let mut forest = Forest::for_instance(instance);
    let mut rng = rng_for(seed, Heuristic::Prefixed);
    for tree in 0..k {
        let budget: Vec<u32> = splits.iter().map(|s| s[tree]).collect();
        let single = single_tree(g, instance.source(), budget.clone());
        let table = NodeStateTable::with_capacities(&single, budget);
        let built = grow(table, Pick::Score, &mut rng, |_| {});
        for (v, p) in built.edges(0) {
            forest.attach(tree, v, p);
        }
    }
    forest
}

fn single_tree(g: &OverlayGraph, source: NodeId, capacity: Vec<u32>) -> DcdaInstance {
    let mut g = g.clone();
    g.set_capacities(capacity).expect("one budget per node");
    DcdaInstance::new(g, source, 1).expect("source is valid")
}

/// Runs the named heuristic with default settings.
pub fn run(algo: Heuristic, instance: &DcdaInstance, seed: u64) -> Forest {
    match algo {
        Heuristic::Greedy => greedy(instance, seed),
        Heuristic::Random => random_variant(instance, seed),
        Heuristic::Prefixed => prefixed_variant(instance, seed),
        Heuristic::Genetic => genetic(instance, &GaConfig::default(), seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(n: usize, edges: &[(usize, usize)], caps: Vec<u32>, k: usize) -> DcdaInstance {
        DcdaInstance::new(OverlayGraph::from_edges(n, edges, caps, vec![1; n]).unwrap(), 0, k)
            .unwrap()
    }

    #[test]
    fn path_is_fully_served() {
        let i = inst(3, &[(0, 1), (1, 2)], vec![1, 1, 1], 1);
        for f in [greedy(&i, 0), random_variant(&i, 0), prefixed_variant(&i, 0)] {
            f.validate(&i).unwrap();
            assert_eq!(f.parent(0, 1), Some(0));
            assert_eq!(f.parent(0, 2), Some(1));
            assert_eq!(f.member_count(), 2);
        }
    }

    #[test]
    fn star_fan_out() {
        let i = inst(4, &[(0, 1), (0, 2), (0, 3)], vec![2, 0, 0, 0], 1);
        let f = greedy(&i, 3);
        f.validate(&i).unwrap();
        assert_eq!(f.member_count(), 2);
    }

    #[test]
    fn greedy_prefers_high_scoring_relay() {
        // s can serve one of a (leaf) or b (relay to c, d).
        let i = inst(5, &[(0, 1), (0, 2), (2, 3), (2, 4)], vec![1, 0, 2, 0, 0], 1);
        let f = greedy(&i, 0);
        assert_eq!(f.member_count(), 3);
        assert!(f.contains(0, 2) && !f.contains(0, 1));
    }

    #[test]
    fn parent_is_the_richest_fulfilled_neighbor() {
        // 3 can attach to 1 (residual 2) or 2 (residual 4); 2 wins.
        let i = inst(4, &[(0, 1), (0, 2), (1, 3), (2, 3)], vec![2, 2, 4, 0], 1);
        let f = greedy(&i, 0);
        assert_eq!(f.parent(0, 3), Some(2));
    }

    #[test]
    fn source_without_capacity_serves_nobody() {
        let i = inst(3, &[(0, 1), (1, 2)], vec![0, 5, 5], 2);
        for algo in [Heuristic::Greedy, Heuristic::Random, Heuristic::Prefixed, Heuristic::Genetic] {
            assert_eq!(run(algo, &i, 1).member_count(), 0);
        }
    }

    #[test]
    fn capacity_split() {
        assert_eq!(split_capacity(3, 3), vec![1, 1, 1]);
        assert_eq!(split_capacity(4, 3), vec![2, 1, 1]);
        assert_eq!(split_capacity(0, 3), vec![0, 0, 0]);
        assert_eq!(split_capacity(2, 3), vec![1, 1, 0]);
    }

    #[test]
    fn prefixed_respects_per_tree_budgets() {
        let i = inst(4, &[(0, 1), (0, 2), (0, 3)], vec![3, 0, 0, 0], 3);
        let f = prefixed_variant(&i, 0);
        f.validate(&i).unwrap();
        for k in 0..3 {
            assert_eq!(f.tree_size(k), 1);
        }
    }

    #[test]
    fn state_table_stays_consistent() {
        let g = OverlayGraph::from_edges(
            7,
            &[(0, 1), (0, 2), (1, 3), (2, 3), (3, 4), (4, 5), (5, 6), (2, 6), (1, 5)],
            vec![2, 1, 2, 1, 1, 2, 0],
            vec![1; 7],
        )
        .unwrap();
        let i = DcdaInstance::new(g, 0, 3).unwrap();
        let mut steps = 0;
        let f = greedy_traced(&i, 11, |t| {
            t.check_consistency().unwrap();
            steps += 1;
        });
        assert_eq!(steps, f.member_count());
    }
}
