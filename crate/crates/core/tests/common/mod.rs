//! Independent oracles shared by the integration and acceptance targets.
//! Nothing here calls into the solvers it is used to check.

#![allow(dead_code)]

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use p2pcap::dcda::{BipartiteBMatchInstance, Cnf};
use p2pcap::flow::{FlowNetwork, FlowResult};
use p2pcap::{DcdaInstance, Forest, OverlayGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdos-Renyi style graph with capacities and demands drawn from the given ranges.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64, cap: (u32, u32), demand: (u32, u32)) -> OverlayGraph {
    let mut g = OverlayGraph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                g.add_edge(u, v).unwrap();
            }
        }
    }
    let caps = (0..n).map(|_| rng.gen_range(cap.0..=cap.1)).collect();
    let dems = (0..n).map(|_| rng.gen_range(demand.0..=demand.1)).collect();
    g.set_capacities(caps).unwrap();
    g.set_demands(dems).unwrap();
    g
}

pub fn random_instance(rng: &mut impl Rng, n: usize, p: f64, cap_hi: u32, k: usize) -> DcdaInstance {
    let g = random_graph(rng, n, p, (0, cap_hi), (0, 0));
    let source = rng.gen_range(0..n);
    DcdaInstance::new(g, source, k).unwrap()
}

/// Minimum s-t cut by enumerating every vertex bipartition.
pub fn min_cut_by_enumeration(net: &FlowNetwork) -> u64 {
    let n = net.vertex_count();
    let (s, t) = (net.source(), net.sink());
    let others: Vec<usize> = (0..n).filter(|&v| v != s && v != t).collect();
    assert!(others.len() <= 20, "cut enumeration limited to 20 inner vertices");
    let mut best = u64::MAX;
    for mask in 0u32..1 << others.len() {
        let mut side = vec![false; n];
        side[s] = true;
        for (i, &v) in others.iter().enumerate() {
            side[v] = mask >> i & 1 == 1;
        }
        let cut = net
            .arcs()
            .iter()
            .filter(|a| side[a.tail] && !side[a.head])
            .map(|a| a.capacity)
            .sum();
        best = best.min(cut);
    }
    best
}

/// Capacity bounds, conservation, and the value as net outflow of the source.
pub fn check_flow(net: &FlowNetwork, flow: &FlowResult) -> Result<(), String> {
    let arcs = net.arcs();
    if flow.arc_flows.len() != arcs.len() {
        return Err(format!("{} flows for {} arcs", flow.arc_flows.len(), arcs.len()));
    }
    let mut excess = vec![0i128; net.vertex_count()];
    for (a, &f) in arcs.iter().zip(&flow.arc_flows) {
        if f > a.capacity {
            return Err(format!("arc {}->{} carries {f} > {}", a.tail, a.head, a.capacity));
        }
        excess[a.tail] -= f as i128;
        excess[a.head] += f as i128;
    }
    for (v, &e) in excess.iter().enumerate() {
        if v != net.source() && v != net.sink() && e != 0 {
            return Err(format!("vertex {v} has imbalance {e}"));
        }
    }
    if -excess[net.source()] != flow.value as i128 {
        return Err(format!("source outflow {} != value {}", -excess[net.source()], flow.value));
    }
    Ok(())
}

/// Rootedness, acyclicity, edge membership and the joint capacity bound.
pub fn check_forest(inst: &DcdaInstance, forest: &Forest) -> Result<(), String> {
    let g = inst.graph();
    let n = inst.node_count();
    let s = inst.source();
    if forest.k() != inst.k() || forest.node_count() != n || forest.source() != s {
        return Err("forest shape does not match instance".into());
    }
    let mut children = vec![0u64; n];
    for k in 0..inst.k() {
        if !forest.contains(k, s) || forest.parent(k, s).is_some() {
            return Err(format!("tree {k} is not rooted at the source"));
        }
        for v in 0..n {
            if v == s || !forest.contains(k, v) {
                if v != s && forest.parent(k, v).is_some() {
                    return Err(format!("tree {k}: non-member {v} has a parent"));
                }
                continue;
            }
            let Some(p) = forest.parent(k, v) else {
                return Err(format!("tree {k}: member {v} has no parent"));
            };
            if !g.has_edge(p, v) {
                return Err(format!("tree {k}: {p}->{v} is not an overlay edge"));
            }
            if !forest.contains(k, p) {
                return Err(format!("tree {k}: parent {p} of {v} is not a member"));
            }
            children[p] += 1;
            let mut cur = v;
            let mut steps = 0;
            while cur != s {
                cur = match forest.parent(k, cur) {
                    Some(p) => p,
                    None => return Err(format!("tree {k}: {v} does not reach the source")),
                };
                steps += 1;
                if steps > n {
                    return Err(format!("tree {k}: cycle through {v}"));
                }
            }
        }
    }
    for u in 0..n {
        if children[u] > g.capacity(u) as u64 {
            return Err(format!("node {u} serves {} > capacity {}", children[u], g.capacity(u)));
        }
    }
    Ok(())
}

pub fn members(inst: &DcdaInstance, forest: &Forest) -> usize {
    (0..inst.k())
        .map(|k| (0..inst.node_count()).filter(|&v| v != inst.source() && forest.contains(k, v)).count())
        .sum()
}

/// Whether a semi-perfect b-matching exists, by trying every assignment of
/// right vertices to adjacent left vertices.
pub fn b_matching_by_enumeration(bounds: &[u32], right: usize, edges: &[(usize, usize)]) -> bool {
    fn go(r: usize, right: usize, adj: &[Vec<usize>], load: &mut [u32], bounds: &[u32]) -> bool {
        if r == right {
            return true;
        }
        for &l in &adj[r] {
            if load[l] < bounds[l] {
                load[l] += 1;
                if go(r + 1, right, adj, load, bounds) {
                    return true;
                }
                load[l] -= 1;
            }
        }
        false
    }
    let mut adj = vec![Vec::new(); right];
    for &(l, r) in edges {
        adj[r].push(l);
    }
    go(0, right, &adj, &mut vec![0; bounds.len()], bounds)
}

/// Random bipartite instance that admits a semi-perfect b-matching: a
/// planted matching plus noise edges.
pub fn random_feasible_bmatching(rng: &mut impl Rng) -> BipartiteBMatchInstance {
    let left = rng.gen_range(1..=5);
    let right = rng.gen_range(1..=8);
    let mut bounds = vec![0u32; left];
    let mut edges = Vec::new();
    for r in 0..right {
        let l = rng.gen_range(0..left);
        bounds[l] += 1;
        edges.push((l, r));
    }
    for b in &mut bounds {
        *b += rng.gen_range(0..=1);
    }
    for l in 0..left {
        for r in 0..right {
            if rng.gen_bool(0.4) {
                edges.push((l, r));
            }
        }
    }
    BipartiteBMatchInstance::new(bounds, right, edges).unwrap()
}

/// Solves the LP relaxation of the semi-perfect b-matching polytope with a
/// random objective and returns the basic optimal edge values.
pub fn b_matching_lp(inst: &BipartiteBMatchInstance, rng: &mut impl Rng) -> Vec<f64> {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = inst
        .edges()
        .iter()
        .map(|_| lp.add_var(rng.gen_range(-1.0..1.0), (0.0, f64::INFINITY)))
        .collect();
    for l in 0..inst.left_count() {
        let row: Vec<_> = inst
            .edges()
            .iter()
            .zip(&vars)
            .filter(|((el, _), _)| *el == l)
            .map(|(_, &v)| (v, 1.0))
            .collect();
        lp.add_constraint(&row[..], ComparisonOp::Le, inst.bounds()[l] as f64);
    }
    for r in 0..inst.right_count() {
        let row: Vec<_> = inst
            .edges()
            .iter()
            .zip(&vars)
            .filter(|((_, er), _)| *er == r)
            .map(|(_, &v)| (v, 1.0))
            .collect();
        lp.add_constraint(&row[..], ComparisonOp::Eq, 1.0);
    }
    let sol = lp.solve().expect("feasible instance");
    vars.iter().map(|&v| sol[v]).collect()
}

/// Random 3-clauses over `vars` variables, DIMACS-signed, with distinct
/// literals per clause.
pub fn random_clauses(rng: &mut impl Rng, vars: usize, clauses: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    while out.len() < clauses {
        let mut c: Vec<i64> = Vec::new();
        while c.len() < 3 {
            let v = rng.gen_range(1..=vars as i64);
            let lit = if rng.gen_bool(0.5) { v } else { -v };
            if !c.contains(&lit) {
                c.push(lit);
            }
        }
        out.push(c);
    }
    out
}

/// The eight sign patterns over three variables: unsatisfiable.
pub fn all_sign_patterns() -> Vec<Vec<i64>> {
    (0..8)
        .map(|m| (1..=3).map(|v| if m >> (v - 1) & 1 == 1 { -v } else { v }).collect())
        .collect()
}

pub fn cnf(vars: usize, clauses: &[Vec<i64>]) -> Cnf {
    let refs: Vec<&[i64]> = clauses.iter().map(Vec::as_slice).collect();
    Cnf::from_dimacs_clauses(vars, &refs).unwrap()
}

/// Satisfiability by trying every assignment.
pub fn satisfiable(vars: usize, clauses: &[Vec<i64>]) -> bool {
    (0u32..1 << vars).any(|m| {
        clauses
            .iter()
            .all(|c| c.iter().any(|&l| (m >> (l.unsigned_abs() - 1) & 1 == 1) == (l > 0)))
    })
}

/// The graph of the four-peer example: capacities 15, 12, 8, 13 and
/// demands 10, 17, 10, 5.
pub fn figure_one() -> OverlayGraph {
    OverlayGraph::from_edges(4, &[(0, 1), (0, 2), (1, 2), (1, 3)], vec![15, 12, 8, 13], vec![10, 17, 10, 5])
        .unwrap()
}
