//! Stationary-regime resource allocation as a bipartite max-flow problem.
//!
//! Every overlay node `u` is split into a supplier `u+` fed by the source
//! with capacity `c(u)` and a consumer `u-` draining into the sink with
//! capacity `d(u)`. Each directed overlay edge `u -> v` becomes an arc
//! `u+ -> v-` whose capacity is large enough never to bind.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::flow::{FlowNetwork, FlowResult};
use crate::overlay::{NodeId, OverlayGraph};

/// The transformed network together with the index layout of its vertices
/// and arcs.
///
/// Vertex `u` is `u+`, vertex `n + u` is `u-`, then come the source `2n` and
/// the sink `2n + 1`. Arcs `[0, n)` leave the source, arcs `[n, 2n)` enter
/// the sink, and the remaining arcs are cross arcs sorted by (tail, head).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SraNetwork {
    node_count: usize,
    network: FlowNetwork,
    cross: Vec<(NodeId, NodeId)>,
}

impl SraNetwork {
    pub fn network(&self) -> &FlowNetwork {
        &self.network
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn supplier(&self, u: NodeId) -> usize {
        u
    }

    pub fn consumer(&self, u: NodeId) -> usize {
        self.node_count + u
    }

    pub fn source_arc_capacities(&self) -> impl Iterator<Item = u64> + '_ {
        self.network.arcs()[..self.node_count].iter().map(|a| a.capacity)
    }

    pub fn sink_arc_capacities(&self) -> impl Iterator<Item = u64> + '_ {
        self.network.arcs()[self.node_count..2 * self.node_count]
            .iter()
            .map(|a| a.capacity)
    }

    /// Overlay edges `(u, v)` behind each cross arc, in arc order.
    pub fn cross_edges(&self) -> &[(NodeId, NodeId)] {
        &self.cross
    }

    pub fn cross_arc_offset(&self) -> usize {
        2 * self.node_count
    }
}

pub fn transform(graph: &OverlayGraph) -> SraNetwork {
    let n = graph.node_count();
    let source = 2 * n;
    let sink = 2 * n + 1;
    // No feasible flow can push more than the total demand through one arc.
    let unbounded = graph.total_demand();
    let mut network = FlowNetwork::new(2 * n + 2, source, sink);
    for u in 0..n {
        network.add_arc(source, u, graph.capacity(u) as u64);
    }
    for u in 0..n {
        network.add_arc(n + u, sink, graph.demand(u) as u64);
    }
    let cross: Vec<_> = graph.directed_edges().collect();
    for &(u, v) in &cross {
        network.add_arc(u, n + v, unbounded);
    }
    SraNetwork {
        node_count: n,
        network,
        cross,
    }
}

pub fn max_flow(network: &SraNetwork) -> FlowResult {
    network.network.max_flow()
}

/// Weight `w(u -> v)` on directed overlay edges; zero weights are omitted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Allocation {
    weights: BTreeMap<(NodeId, NodeId), u64>,
}

impl Allocation {
    pub fn weight(&self, u: NodeId, v: NodeId) -> u64 {
        self.weights.get(&(u, v)).copied().unwrap_or(0)
    }

    /// Nonzero weights ordered by (sender, receiver).
    pub fn iter(&self) -> impl Iterator<Item = ((NodeId, NodeId), u64)> + '_ {
        self.weights.iter().map(|(&k, &w)| (k, w))
    }

    pub fn total(&self) -> u64 {
        self.weights.values().sum()
    }

    pub fn sent_by(&self, u: NodeId) -> u64 {
        self.weights.range((u, 0)..=(u, NodeId::MAX)).map(|(_, &w)| w).sum()
    }

    pub fn received_by(&self, v: NodeId) -> u64 {
        self.weights
            .iter()
            .filter(|(&(_, r), _)| r == v)
            .map(|(_, &w)| w)
            .sum()
    }

    /// Checks edge membership and both capacity and demand bounds.
    pub fn check(&self, graph: &OverlayGraph) -> Result<(), String> {
        let n = graph.node_count();
        let mut sent = vec![0u64; n];
        let mut received = vec![0u64; n];
        for ((u, v), w) in self.iter() {
            if !graph.has_edge(u, v) {
                return Err(format!("weight on non-edge {u}->{v}"));
            }
            sent[u] += w;
            received[v] += w;
        }
        for u in 0..n {
            if sent[u] > graph.capacity(u) as u64 {
                return Err(format!("node {u} sends {} > capacity {}", sent[u], graph.capacity(u)));
            }
            if received[u] > graph.demand(u) as u64 {
                return Err(format!("node {u} receives {} > demand {}", received[u], graph.demand(u)));
            }
        }
        Ok(())
    }

    /// `w <u> <v> <weight>` per nonzero weight.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for ((u, v), w) in self.iter() {
            writeln!(out, "w {u} {v} {w}").unwrap();
        }
        out
    }
}

pub fn extract_allocation(network: &SraNetwork, flow: &FlowResult) -> Allocation {
    let offset = network.cross_arc_offset();
    let weights = network
        .cross
        .iter()
        .enumerate()
        .filter_map(|(i, &edge)| {
            let f = flow.arc_flows[offset + i];
            (f > 0).then_some((edge, f))
        })
        .collect();
    Allocation { weights }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SraOutcome {
    pub satisfiable: bool,
    pub allocation: Allocation,
    pub flow_value: u64,
    pub total_demand: u64,
    /// Allocated share of the total demand; 1 when nothing is demanded.
    pub ratio: f64,
}

/// Solves the allocation problem exactly: every demand can be met iff the
/// maximum flow saturates all sink arcs.
pub fn sra_decide(graph: &OverlayGraph) -> SraOutcome {
    let network = transform(graph);
    let flow = max_flow(&network);
    let allocation = extract_allocation(&network, &flow);
    let total_demand = graph.total_demand();
    let ratio = if total_demand == 0 {
        1.0
    } else {
        flow.value as f64 / total_demand as f64
    };
    SraOutcome {
        satisfiable: flow.value == total_demand,
        allocation,
        flow_value: flow.value,
        total_demand,
        ratio,
    }
}
