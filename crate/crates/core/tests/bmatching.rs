mod common;

use common::{b_matching_by_enumeration, b_matching_lp, random_feasible_bmatching, rng};
use p2pcap::dcda::{b_matching_feasible, BMatchOutcome, BipartiteBMatchInstance};
use rand::Rng;

fn check_outcome(inst: &BipartiteBMatchInstance) -> bool {
    let expected = b_matching_by_enumeration(inst.bounds(), inst.right_count(), inst.edges());
    match b_matching_feasible(inst) {
        BMatchOutcome::Feasible(pairs) => {
            assert!(expected, "{inst:?}");
            assert!(inst.is_semi_perfect(&pairs));
            let mut load = vec![0u32; inst.left_count()];
            for (r, &(l, pr)) in pairs.iter().enumerate() {
                assert_eq!(r, pr);
                assert!(inst.edges().contains(&(l, r)));
                load[l] += 1;
            }
            assert!(load.iter().zip(inst.bounds()).all(|(x, b)| x <= b));
            true
        }
        BMatchOutcome::Infeasible(set) => {
            assert!(!expected, "{inst:?}");
            assert!(!set.is_empty());
            let supply: u32 = (0..inst.left_count())
                .filter(|&l| set.iter().any(|&r| inst.edges().contains(&(l, r))))
                .map(|l| inst.bounds()[l])
                .sum();
            assert!(set.len() as u32 > supply, "{inst:?} witness {set:?}");
            false
        }
    }
}

/// Every bipartite graph with `|L| + |R| <= total` and bounds in `0..=2`.
fn exhaustive(total: usize) -> (usize, usize) {
    let (mut feasible, mut all) = (0, 0);
    for left in 1..total {
        for right in 1..=total - left {
            let slots = left * right;
            for edge_mask in 0u32..1 << slots {
                let edges: Vec<_> = (0..slots)
                    .filter(|i| edge_mask >> i & 1 == 1)
                    .map(|i| (i / right, i % right))
                    .collect();
                for b in 0..3usize.pow(left as u32) {
                    let bounds = (0..left).map(|i| (b / 3usize.pow(i as u32) % 3) as u32).collect();
                    let inst = BipartiteBMatchInstance::new(bounds, right, edges.clone()).unwrap();
                    feasible += check_outcome(&inst) as usize;
                    all += 1;
                }
            }
        }
    }
    (feasible, all)
}

#[test]
fn agrees_with_enumeration_on_all_small_graphs() {
    let (feasible, all) = exhaustive(6);
    assert!(feasible > 0 && feasible < all);
}

#[test]
fn agrees_with_enumeration_on_random_larger_graphs() {
    let mut r = rng(8);
    for _ in 0..3000 {
        let left = r.gen_range(1..=4);
        let right = r.gen_range(1..=8 - left);
        let bounds = (0..left).map(|_| r.gen_range(0..=3)).collect();
        let edges = (0..left)
            .flat_map(|l| (0..right).map(move |r| (l, r)))
            .filter(|_| r.gen_bool(0.5))
            .collect();
        check_outcome(&BipartiteBMatchInstance::new(bounds, right, edges).unwrap());
    }
}

#[test]
fn hall_violation_witness() {
    let inst = BipartiteBMatchInstance::new(vec![1], 2, vec![(0, 0), (0, 1)]).unwrap();
    assert_eq!(b_matching_feasible(&inst), BMatchOutcome::Infeasible(vec![0, 1]));
    let inst = BipartiteBMatchInstance::new(vec![2], 2, vec![(0, 0), (0, 1)]).unwrap();
    assert_eq!(b_matching_feasible(&inst), BMatchOutcome::Feasible(vec![(0, 0), (0, 1)]));
}

#[test]
fn lp_relaxation_vertices_are_integral() {
    let mut r = rng(42);
    for _ in 0..100 {
        let inst = random_feasible_bmatching(&mut r);
        let x = b_matching_lp(&inst, &mut r);
        assert!(x.iter().all(|v| v.abs() < 1e-6 || (v - 1.0).abs() < 1e-6), "{inst:?} -> {x:?}");
    }
}
