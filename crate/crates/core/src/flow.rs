//! Integral single-source single-sink maximum flow.
//!
//! Blocking flows along shortest residual paths (Dinic). Arcs are explored in
//! insertion order, so the returned flow is a deterministic function of the
//! network.

use std::collections::VecDeque;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlowArc {
    pub tail: usize,
    pub head: usize,
    pub capacity: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowNetwork {
    vertex_count: usize,
    source: usize,
    sink: usize,
    arcs: Vec<FlowArc>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowResult {
    pub value: u64,
    /// Flow on each arc, indexed like [`FlowNetwork::arcs`].
    pub arc_flows: Vec<u64>,
}

/// An s-t cut read off the residual graph of a maximum flow.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinCut {
    pub source_side: Vec<bool>,
    pub capacity: u64,
}

impl FlowNetwork {
    pub fn new(vertex_count: usize, source: usize, sink: usize) -> Self {
        assert!(source < vertex_count && sink < vertex_count && source != sink);
        FlowNetwork {
            vertex_count,
            source,
            sink,
            arcs: Vec::new(),
        }
    }

    /// Appends an arc and returns its index.
    pub fn add_arc(&mut self, tail: usize, head: usize, capacity: u64) -> usize {
        assert!(tail < self.vertex_count && head < self.vertex_count);
        self.arcs.push(FlowArc {
            tail,
            head,
            capacity,
        });
        self.arcs.len() - 1
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn arcs(&self) -> &[FlowArc] {
        &self.arcs
    }

    pub fn max_flow(&self) -> FlowResult {
        Dinic::new(self).run()
    }

    /// Checks capacity bounds, conservation, and that `value` is the net
    /// outflow of the source.
    pub fn check_flow(&self, flow: &FlowResult) -> Result<(), String> {
        if flow.arc_flows.len() != self.arcs.len() {
            return Err("arc count mismatch".into());
        }
        let mut balance = vec![0i128; self.vertex_count];
        for (i, (arc, &f)) in self.arcs.iter().zip(&flow.arc_flows).enumerate() {
            if f > arc.capacity {
                return Err(format!("arc {i} carries {f} > capacity {}", arc.capacity));
            }
            balance[arc.tail] -= f as i128;
            balance[arc.head] += f as i128;
        }
        for (v, &b) in balance.iter().enumerate() {
            if v != self.source && v != self.sink && b != 0 {
                return Err(format!("conservation violated at vertex {v} (excess {b})"));
            }
        }
        if -balance[self.source] != flow.value as i128 {
            return Err(format!(
                "source outflow {} differs from value {}",
                -balance[self.source],
                flow.value
            ));
        }
        Ok(())
    }

    /// Source side of the cut closest to the source: vertices reachable
    /// from the source in the residual graph of `flow`.
    pub fn min_cut(&self, flow: &FlowResult) -> MinCut {
        let seen = self.residual_search(flow, self.source, true);
        self.cut_from_side(seen)
    }

    /// Cut closest to the sink: the sink side is every vertex that can still
    /// reach the sink in the residual graph of `flow`.
    pub fn min_cut_near_sink(&self, flow: &FlowResult) -> MinCut {
        let reaches = self.residual_search(flow, self.sink, false);
        self.cut_from_side(reaches.into_iter().map(|r| !r).collect())
    }

    fn residual_search(&self, flow: &FlowResult, start: usize, forward_search: bool) -> Vec<bool> {
        let mut incident: Vec<Vec<(usize, bool)>> = vec![Vec::new(); self.vertex_count];
        for (i, arc) in self.arcs.iter().enumerate() {
            incident[arc.tail].push((i, true));
            incident[arc.head].push((i, false));
        }
        let mut seen = vec![false; self.vertex_count];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            for &(i, at_tail) in &incident[u] {
                let arc = &self.arcs[i];
                let next = if at_tail { arc.head } else { arc.tail };
                // Residual u -> next exists when the arc leaves u with spare
                // capacity or enters u carrying flow; a backward search asks
                // the same of next -> u.
                let residual = if at_tail == forward_search {
                    arc.capacity - flow.arc_flows[i]
                } else {
                    flow.arc_flows[i]
                };
                if residual > 0 && !seen[next] {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
        seen
    }

    fn cut_from_side(&self, seen: Vec<bool>) -> MinCut {
        let capacity = self
            .arcs
            .iter()
            .filter(|a| seen[a.tail] && !seen[a.head])
            .map(|a| a.capacity)
            .sum();
        MinCut {
            source_side: seen,
            capacity,
        }
    }
}

struct Dinic {
    source: usize,
    sink: usize,
    // Residual edges come in pairs: 2i forward, 2i + 1 backward for arc i.
    head: Vec<usize>,
    residual: Vec<u64>,
    adjacency: Vec<Vec<usize>>,
    level: Vec<u32>,
    cursor: Vec<usize>,
    original: Vec<u64>,
}

impl Dinic {
    fn new(net: &FlowNetwork) -> Self {
        let mut adjacency = vec![Vec::new(); net.vertex_count];
        let mut head = Vec::with_capacity(2 * net.arcs.len());
        let mut residual = Vec::with_capacity(2 * net.arcs.len());
        for (i, arc) in net.arcs.iter().enumerate() {
            adjacency[arc.tail].push(2 * i);
            adjacency[arc.head].push(2 * i + 1);
            head.push(arc.head);
            head.push(arc.tail);
            residual.push(arc.capacity);
            residual.push(0);
        }
        Dinic {
            source: net.source,
            sink: net.sink,
            head,
            residual,
            adjacency,
            level: vec![u32::MAX; net.vertex_count],
            cursor: vec![0; net.vertex_count],
            original: net.arcs.iter().map(|a| a.capacity).collect(),
        }
    }

    fn run(mut self) -> FlowResult {
        let mut value = 0u64;
        while self.build_levels() {
            self.cursor.fill(0);
            loop {
                let pushed = self.augment(self.source, u64::MAX);
                if pushed == 0 {
                    break;
                }
                value += pushed;
            }
        }
        let arc_flows = self
            .original
            .iter()
            .enumerate()
            .map(|(i, &cap)| cap - self.residual[2 * i])
            .collect();
        FlowResult { value, arc_flows }
    }

    fn build_levels(&mut self) -> bool {
        self.level.fill(u32::MAX);
        self.level[self.source] = 0;
        let mut queue = VecDeque::from([self.source]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adjacency[u] {
                let v = self.head[e];
                if self.residual[e] > 0 && self.level[v] == u32::MAX {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[self.sink] != u32::MAX
    }

    fn augment(&mut self, u: usize, limit: u64) -> u64 {
        if u == self.sink {
            return limit;
        }
        while self.cursor[u] < self.adjacency[u].len() {
            let e = self.adjacency[u][self.cursor[u]];
            let v = self.head[e];
            if self.residual[e] > 0 && self.level[v] == self.level[u] + 1 {
                let pushed = self.augment(v, limit.min(self.residual[e]));
                if pushed > 0 {
                    self.residual[e] -= pushed;
                    self.residual[e ^ 1] += pushed;
                    return pushed;
                }
            }
            self.cursor[u] += 1;
        }
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_example() {
        // CLRS figure 26.1: max flow 23
        let mut net = FlowNetwork::new(6, 0, 5);
        for (u, v, c) in [
            (0, 1, 16),
            (0, 2, 13),
            (2, 1, 4),
            (1, 3, 12),
            (3, 2, 9),
            (2, 4, 14),
            (4, 3, 7),
            (3, 5, 20),
            (4, 5, 4),
        ] {
            net.add_arc(u, v, c);
        }
        let flow = net.max_flow();
        assert_eq!(flow.value, 23);
        net.check_flow(&flow).unwrap();
        assert_eq!(net.min_cut(&flow).capacity, 23);
        assert_eq!(net.min_cut_near_sink(&flow).capacity, 23);
    }

    #[test]
    fn disconnected_sink() {
        let mut net = FlowNetwork::new(3, 0, 2);
        net.add_arc(0, 1, 5);
        let flow = net.max_flow();
        assert_eq!(flow.value, 0);
        assert_eq!(net.min_cut(&flow).capacity, 0);
    }

    #[test]
    fn check_flow_detects_violations() {
        let mut net = FlowNetwork::new(3, 0, 2);
        net.add_arc(0, 1, 2);
        net.add_arc(1, 2, 2);
        let over = FlowResult {
            value: 3,
            arc_flows: vec![3, 3],
        };
        assert!(net.check_flow(&over).is_err());
        let leaky = FlowResult {
            value: 2,
            arc_flows: vec![2, 1],
        };
        assert!(net.check_flow(&leaky).is_err());
    }
}
