//! Genetic search over priority orders.
//!
//! A genome holds, for every tree, a permutation of the non-source nodes.
//! Decoding grows all trees at once: at each step the accessible node with
//! the best rank in its tree's permutation is served (lower tree index on
//! ties), below its richest fulfilled neighbor.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{rng_for, Heuristic, NodeStateTable};
use crate::dcda::{DcdaInstance, Forest};
use crate::overlay::{NodeId, OverlayGraph};

#[derive(Clone, Debug, PartialEq)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    /// Probability that an offspring gets one random transposition.
    pub mutation_rate: f64,
    pub tournament: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 150,
            generations: 300,
            mutation_rate: 0.1,
            tournament: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaGenome {
    /// One permutation of the non-source nodes per tree, best first.
    pub priorities: Vec<Vec<NodeId>>,
    pub fitness: usize,
}

impl GaGenome {
    fn random(instance: &DcdaInstance, rng: &mut ChaCha8Rng) -> Self {
        let base: Vec<NodeId> = (0..instance.node_count())
            .filter(|&v| v != instance.source())
            .collect();
        let priorities = (0..instance.k())
            .map(|_| {
                let mut p = base.clone();
                p.shuffle(rng);
                p
            })
            .collect();
        GaGenome {
            priorities,
            fitness: 0,
        }
    }

    pub fn is_valid(&self, instance: &DcdaInstance) -> bool {
        self.priorities.len() == instance.k()
            && self.priorities.iter().all(|p| {
                let mut seen = vec![false; instance.node_count()];
                p.len() + 1 == instance.node_count()
                    && p.iter().all(|&v| {
                        v != instance.source() && !std::mem::replace(&mut seen[v], true)
                    })
            })
    }

    pub fn decode(&self, instance: &DcdaInstance) -> Forest {
        let mut decoder = Decoder::new(instance);
        decoder.run(instance, &self.priorities);
        decoder.forest(instance)
    }

    /// Reference decoding on a [`NodeStateTable`]; same result as
    /// [`decode`](Self::decode), only slower.
    pub fn decode_with_table(&self, instance: &DcdaInstance) -> Forest {
        let n = instance.node_count();
        let keys = self.priorities.iter().map(|perm| ranks(perm, n)).collect();
        let mut table = NodeStateTable::with_priorities(instance, keys);
        loop {
            let next = (0..instance.k())
                .filter_map(|k| table.first_accessible(k).map(|(rank, v)| (rank, k, v)))
                .min();
            let Some((_, tree, child)) = next else { break };
            let parent = table.best_parent(tree, child).expect("accessible node has a parent");
            table.attach(tree, child, parent);
        }
        table.into_forest()
    }
}

fn ranks(perm: &[NodeId], n: usize) -> Vec<u32> {
    let mut rank = vec![u32::MAX; n];
    for (i, &v) in perm.iter().enumerate() {
        rank[v] = i as u32;
    }
    rank
}

/// Reusable decoding buffers. Accessible nodes sit in one heap per tree;
/// entries that went stale are skipped when they reach the top.
struct Decoder {
    n: usize,
    residual: Vec<u32>,
    /// `parent[k * n + v]`; the source is its own parent.
    parent: Vec<Option<NodeId>>,
    fulfilled: Vec<u32>,
    rank: Vec<u32>,
    heaps: Vec<BinaryHeap<Reverse<(u32, NodeId)>>>,
    members: usize,
}

impl Decoder {
    fn new(instance: &DcdaInstance) -> Self {
        let n = instance.node_count();
        let k = instance.k();
        Decoder {
            n,
            residual: Vec::with_capacity(n),
            parent: vec![None; k * n],
            fulfilled: vec![0; k * n],
            rank: vec![0; k * n],
            heaps: (0..k).map(|_| BinaryHeap::new()).collect(),
            members: 0,
        }
    }

    fn accessible(&self, tree: usize, v: NodeId) -> bool {
        let i = tree * self.n + v;
        self.parent[i].is_none() && self.fulfilled[i] > 0
    }

    fn fulfil(&mut self, g: &OverlayGraph, tree: usize, v: NodeId) {
        let base = tree * self.n;
        for &w in g.neighbors(v) {
            self.fulfilled[base + w] += 1;
            if self.fulfilled[base + w] == 1 && self.parent[base + w].is_none() {
                self.heaps[tree].push(Reverse((self.rank[base + w], w)));
            }
        }
    }

    fn kill(&mut self, g: &OverlayGraph, v: NodeId) {
        for tree in 0..self.heaps.len() {
            let base = tree * self.n;
            if self.parent[base + v].is_some() {
                for &w in g.neighbors(v) {
                    self.fulfilled[base + w] -= 1;
                }
            }
        }
    }

    fn run(&mut self, instance: &DcdaInstance, priorities: &[Vec<NodeId>]) -> usize {
        let g = instance.graph();
        let n = self.n;
        let s = instance.source();
        self.residual.clear();
        self.residual.extend_from_slice(g.capacities());
        self.parent.fill(None);
        self.fulfilled.fill(0);
        self.members = 0;
        for (tree, perm) in priorities.iter().enumerate() {
            let base = tree * n;
            for (i, &v) in perm.iter().enumerate() {
                self.rank[base + v] = i as u32;
            }
            self.heaps[tree].clear();
            self.parent[base + s] = Some(s);
            if self.residual[s] > 0 {
                self.fulfil(g, tree, s);
            }
        }
        loop {
            let mut next: Option<(u32, usize, NodeId)> = None;
            for tree in 0..self.heaps.len() {
                while let Some(&Reverse((rank, v))) = self.heaps[tree].peek() {
                    if self.accessible(tree, v) {
                        if next.map_or(true, |b| (rank, tree) < (b.0, b.1)) {
                            next = Some((rank, tree, v));
                        }
                        break;
                    }
                    self.heaps[tree].pop();
                }
            }
            let Some((_, tree, child)) = next else { break };
            self.heaps[tree].pop();
            let base = tree * n;
            let mut par: Option<NodeId> = None;
            for &p in g.neighbors(child) {
                let fulfilled = self.parent[base + p].is_some() && self.residual[p] > 0;
                if fulfilled && par.map_or(true, |b| self.residual[p] > self.residual[b]) {
                    par = Some(p);
                }
            }
            let par = par.expect("accessible node has a parent");
            self.parent[base + child] = Some(par);
            self.members += 1;
            self.residual[par] -= 1;
            if self.residual[child] > 0 {
                self.fulfil(g, tree, child);
            }
            if self.residual[par] == 0 {
                self.kill(g, par);
            }
        }
        self.members
    }

    fn forest(&self, instance: &DcdaInstance) -> Forest {
        let s = instance.source();
        let mut forest = Forest::for_instance(instance);
        for tree in 0..self.heaps.len() {
            for v in (0..self.n).filter(|&v| v != s) {
                if let Some(p) = self.parent[tree * self.n + v] {
                    forest.attach(tree, v, p);
                }
            }
        }
        forest
    }
}

/// Order crossover: a slice of `a` is kept in place, the remaining positions
/// are filled with the other nodes in the order they appear in `b`, starting
/// right after the slice and wrapping around.
fn order_crossover(a: &[NodeId], b: &[NodeId], rng: &mut ChaCha8Rng) -> Vec<NodeId> {
    let len = a.len();
    if len < 2 {
        return a.to_vec();
    }
    let mut i = rng.gen_range(0..len);
    let mut j = rng.gen_range(0..len);
    if i > j {
        std::mem::swap(&mut i, &mut j);
    }
    let max = a.iter().chain(b).copied().max().unwrap_or(0);
    let mut taken = vec![false; max + 1];
    let mut child = vec![usize::MAX; len];
    for pos in i..=j {
        child[pos] = a[pos];
        taken[a[pos]] = true;
    }
    let mut write = (j + 1) % len;
    for step in 0..len {
        let v = b[(j + 1 + step) % len];
        if !taken[v] {
            child[write] = v;
            taken[v] = true;
            write = (write + 1) % len;
        }
    }
    child
}

fn tournament<'p>(pop: &'p [GaGenome], size: usize, rng: &mut ChaCha8Rng) -> &'p GaGenome {
    (0..size.max(1))
        .map(|_| &pop[rng.gen_range(0..pop.len())])
        .max_by_key(|g| g.fitness)
        .unwrap()
}

fn fittest(population: &[GaGenome]) -> &GaGenome {
    population
        .iter()
        .enumerate()
        .max_by_key(|(i, g)| (g.fitness, Reverse(*i)))
        .map(|(_, g)| g)
        .expect("population is not empty")
}

/// Evolves a population of priority orders and returns the forest of the
/// best genome. The best genome of each generation survives unchanged, so
/// it is also the best one ever seen.
pub fn genetic(instance: &DcdaInstance, config: &GaConfig, seed: u64) -> Forest {
    assert!(config.population >= 2, "population must hold at least two genomes");
    let mut rng = rng_for(seed, Heuristic::Genetic);
    let mut decoder = Decoder::new(instance);
    let mut evaluate = |g: &mut GaGenome| g.fitness = decoder.run(instance, &g.priorities);

    let mut population: Vec<GaGenome> = (0..config.population)
        .map(|_| GaGenome::random(instance, &mut rng))
        .collect();
    population.iter_mut().for_each(&mut evaluate);

    for _ in 0..config.generations {
        let mut next = Vec::with_capacity(config.population);
        next.push(fittest(&population).clone());
        while next.len() < config.population {
            let a = tournament(&population, config.tournament, &mut rng);
            let b = tournament(&population, config.tournament, &mut rng);
            let priorities: Vec<Vec<NodeId>> = a
                .priorities
                .iter()
                .zip(&b.priorities)
                .map(|(pa, pb)| order_crossover(pa, pb, &mut rng))
                .collect();
            let mut child = GaGenome {
                priorities,
                fitness: 0,
            };
            if rng.gen_bool(config.mutation_rate) {
                let tree = rng.gen_range(0..child.priorities.len());
                let perm = &mut child.priorities[tree];
                if perm.len() >= 2 {
                    let x = rng.gen_range(0..perm.len());
                    let y = rng.gen_range(0..perm.len());
                    perm.swap(x, y);
                }
            }
            evaluate(&mut child);
            next.push(child);
        }
        population = next;
    }
    fittest(&population).decode(instance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::overlay::OverlayGraph;
    use rand::SeedableRng;

    fn small() -> DcdaInstance {
        let g = OverlayGraph::from_edges(
            6,
            &[(0, 1), (0, 2), (1, 3), (2, 3), (3, 4), (4, 5), (2, 5)],
            vec![2, 1, 2, 1, 1, 0],
            vec![1; 6],
        )
        .unwrap();
        DcdaInstance::new(g, 0, 2).unwrap()
    }

    #[test]
    fn crossover_yields_permutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Vec<usize> = (1..10).collect();
        let mut b = a.clone();
        b.reverse();
        for _ in 0..200 {
            let mut c = order_crossover(&a, &b, &mut rng);
            c.sort_unstable();
            assert_eq!(c, a);
        }
    }

    #[test]
    fn decoded_forests_are_valid() {
        let inst = small();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let g = GaGenome::random(&inst, &mut rng);
            assert!(g.is_valid(&inst));
            g.decode(&inst).validate(&inst).unwrap();
        }
    }

    #[test]
    fn fast_decoding_matches_the_state_table() {
        let g = OverlayGraph::from_edges(
            8,
            &[(0, 1), (0, 2), (1, 3), (2, 3), (3, 4), (4, 5), (5, 6), (2, 6), (1, 5), (6, 7), (4, 7)],
            vec![2, 1, 2, 1, 3, 2, 0, 1],
            vec![1; 8],
        )
        .unwrap();
        for k in 1..=3 {
            let inst = DcdaInstance::new(g.clone(), 0, k).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
            for _ in 0..200 {
                let genome = GaGenome::random(&inst, &mut rng);
                assert_eq!(genome.decode(&inst), genome.decode_with_table(&inst));
            }
        }
    }

    #[test]
    fn zero_generations_returns_best_initial_decoding() {
        let inst = small();
        let cfg = GaConfig {
            population: 2,
            generations: 0,
            ..GaConfig::default()
        };
        let f = genetic(&inst, &cfg, 9);
        f.validate(&inst).unwrap();

        let mut rng = rng_for(9, Heuristic::Genetic);
        let g1 = GaGenome::random(&inst, &mut rng);
        let g2 = GaGenome::random(&inst, &mut rng);
        let best = g1.decode_with_table(&inst).member_count().max(g2.decode_with_table(&inst).member_count());
        assert_eq!(f.member_count(), best);
    }

    #[test]
    fn seeded() {
        let inst = small();
        let cfg = GaConfig {
            population: 10,
            generations: 5,
            ..GaConfig::default()
        };
        assert_eq!(genetic(&inst, &cfg, 4), genetic(&inst, &cfg, 4));
    }
}
