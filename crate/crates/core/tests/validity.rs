mod common;

use common::{check_flow, check_forest, members, random_graph, random_instance, rng};
use p2pcap::dcda::{brute_force, branch_and_bound, solve_p1_benders};
use p2pcap::heuristics::{genetic, greedy, prefixed_variant, random_variant, GaConfig};
use p2pcap::sra::{max_flow, sra_decide, transform};
use p2pcap::DcdaInstance;
use rand::Rng;
use std::time::Duration;

const SMALL_GA: GaConfig = GaConfig {
    population: 12,
    generations: 8,
    mutation_rate: 0.1,
    tournament: 2,
};

fn check_heuristics(inst: &DcdaInstance, seed: u64) -> usize {
    let mut best = 0;
    for f in [
        greedy(inst, seed),
        random_variant(inst, seed),
        prefixed_variant(inst, seed),
        genetic(inst, &SMALL_GA, seed),
    ] {
        check_forest(inst, &f).unwrap_or_else(|e| panic!("{e}: {inst:?}"));
        best = best.max(members(inst, &f));
    }
    best
}

#[test]
fn every_solver_output_is_a_valid_forest() {
    let mut r = rng(1000);
    for i in 0..1200 {
        let n = r.gen_range(2..=40);
        let k = r.gen_range(1..=4);
        let p = r.gen_range(0.05..0.6);
        let hi = r.gen_range(0..=6);
        let inst = random_instance(&mut r, n, p, hi, k);
        check_heuristics(&inst, i);
        if n <= 10 {
            let bb = branch_and_bound(&inst, Some(Duration::from_millis(200)));
            check_forest(&inst, &bb.forest).unwrap();
            if k == 1 {
                check_forest(&inst, &solve_p1_benders(&inst).unwrap().forest).unwrap();
            }
        }
    }
}

#[test]
fn every_flow_respects_conservation_and_capacity() {
    let mut r = rng(2000);
    for _ in 0..1200 {
        let n = r.gen_range(1..=60);
        let p = r.gen_range(0.02..0.5);
        let g = random_graph(&mut r, n, p, (0, 6), (0, 6));
        let net = transform(&g);
        let flow = max_flow(&net);
        check_flow(net.network(), &flow).unwrap();
        assert_eq!(net.network().min_cut(&flow).capacity, flow.value);
        let out = sra_decide(&g);
        out.allocation.check(&g).unwrap();
        assert_eq!(out.allocation.total(), flow.value);
        assert!((0.0..=1.0).contains(&out.ratio));
    }
}

#[test]
fn heuristics_never_beat_the_optimum() {
    let mut r = rng(3000);
    for i in 0..200 {
        let n = r.gen_range(3..=8);
        let k = r.gen_range(1..=2);
        let inst = random_instance(&mut r, n, 0.45, 3, k);
        let best = brute_force(&inst).unwrap().1;
        assert!(check_heuristics(&inst, i) <= best);
    }
}

#[test]
fn heuristics_are_reproducible() {
    let mut r = rng(4000);
    let inst = random_instance(&mut r, 60, 0.1, 4, 3);
    for seed in 0..5 {
        assert_eq!(greedy(&inst, seed), greedy(&inst, seed));
        assert_eq!(random_variant(&inst, seed), random_variant(&inst, seed));
        assert_eq!(prefixed_variant(&inst, seed), prefixed_variant(&inst, seed));
        assert_eq!(genetic(&inst, &SMALL_GA, seed), genetic(&inst, &SMALL_GA, seed));
    }
}

#[test]
fn trees_built_from_levels_have_matching_depths() {
    let mut r = rng(5000);
    for _ in 0..60 {
        let n = r.gen_range(3..=9);
        let inst = random_instance(&mut r, n, 0.4, 3, 1);
        let out = solve_p1_benders(&inst).unwrap();
        for v in 0..n {
            assert_eq!(out.levels.level(v).is_some(), v != inst.source() && out.forest.contains(0, v));
            if let Some(j) = out.levels.level(v) {
                assert_eq!(out.forest.depth(0, v), Some(j));
            }
        }
    }
}
