//! Line-oriented instance files:
//!
//! ```text
//! p2p <n> <m_edges>
//! node <id> <capacity> <demand>     (n lines)
//! edge <u> <v>                      (m lines)
//! ```
//!
//! `#` starts a comment.

use std::fmt::Write as _;
use std::path::Path;

use super::OverlayGraph;
use crate::error::{Error, Result};

pub fn render_instance(graph: &OverlayGraph) -> String {
    let mut out = String::new();
    writeln!(out, "p2p {} {}", graph.node_count(), graph.edge_count()).unwrap();
    for u in 0..graph.node_count() {
        writeln!(out, "node {u} {} {}", graph.capacity(u), graph.demand(u)).unwrap();
    }
    for (u, v) in graph.edges() {
        writeln!(out, "edge {u} {v}").unwrap();
    }
    out
}

pub fn write_instance(graph: &OverlayGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_instance(graph)).map_err(|e| Error::io(path, e))
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<OverlayGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_instance(&text)
}

fn field<T: std::str::FromStr>(line: usize, what: &str, tok: Option<&str>) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    if tok.starts_with('-') {
        return Err(Error::parse(line, format!("negative {what} `{tok}`")));
    }
    tok.parse()
        .map_err(|_| Error::parse(line, format!("bad {what} `{tok}`")))
}

pub fn parse_instance(text: &str) -> Result<OverlayGraph> {
    let mut graph: Option<(OverlayGraph, usize)> = None;
    let mut node_seen = Vec::new();
    let mut nodes = 0;
    let mut edges = 0;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        let Some(keyword) = toks.next() else { continue };

        match (keyword, graph.as_mut()) {
            ("p2p", None) => {
                let n: usize = field(line, "node count", toks.next())?;
                let m: usize = field(line, "edge count", toks.next())?;
                node_seen = vec![false; n];
                graph = Some((OverlayGraph::new(n), m));
            }
            ("p2p", Some(_)) => return Err(Error::parse(line, "duplicate header")),
            (_, None) => return Err(Error::parse(line, "expected `p2p <n> <m>` header")),
            ("node", Some((g, _))) => {
                let id: usize = field(line, "node id", toks.next())?;
                let cap: u32 = field(line, "capacity", toks.next())?;
                let dem: u32 = field(line, "demand", toks.next())?;
                if id >= g.node_count() {
                    return Err(Error::parse(line, format!("node id {id} out of range")));
                }
                if std::mem::replace(&mut node_seen[id], true) {
                    return Err(Error::parse(line, format!("node {id} declared twice")));
                }
                g.set_capacity(id, cap);
                g.set_demand(id, dem);
                nodes += 1;
            }
            ("edge", Some((g, _))) => {
                let u: usize = field(line, "edge endpoint", toks.next())?;
                let v: usize = field(line, "edge endpoint", toks.next())?;
                match g.add_edge(u, v) {
                    Ok(true) => edges += 1,
                    Ok(false) => return Err(Error::parse(line, format!("duplicate edge {u}-{v}"))),
                    Err(e) => return Err(Error::parse(line, e.to_string())),
                }
            }
            (other, Some(_)) => {
                return Err(Error::parse(line, format!("unknown record `{other}`")));
            }
        }
        if let Some(extra) = toks.next() {
            return Err(Error::parse(line, format!("unexpected token `{extra}`")));
        }
    }

    let (g, m) = graph.ok_or_else(|| Error::parse(last_line.max(1), "missing header"))?;
    if nodes != g.node_count() {
        return Err(Error::parse(
            last_line,
            format!("declared {} nodes, found {nodes}", g.node_count()),
        ));
    }
    if edges != m {
        return Err(Error::parse(last_line, format!("declared {m} edges, found {edges}")));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FIG1: &str = "\
# four peers u, v, w, z
p2p 4 4
node 0 15 10
node 1 12 17
node 2 8 10
node 3 13 5
edge 0 1
edge 0 2
edge 1 2
edge 1 3
";

    #[test]
    fn figure_one_instance() {
        let g = parse_instance(FIG1).unwrap();
        assert_eq!(g.capacities(), &[15, 12, 8, 13]);
        assert_eq!(g.demands(), &[10, 17, 10, 5]);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2), (1, 2), (1, 3)]);
        assert_eq!(render_instance(&g), FIG1.lines().skip(1).map(|l| format!("{l}\n")).collect::<String>());
    }

    #[test]
    fn isolated_node() {
        let g = parse_instance("p2p 1 0\nnode 0 2 1\n").unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn dangling_endpoint_reports_line() {
        let err = parse_instance("p2p 2 1\nnode 0 1 1\nnode 1 1 1\nedge 0 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn negative_capacity_reports_line() {
        let err = parse_instance("p2p 1 0\nnode 0 -1 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn malformed_files() {
        for bad in [
            "",
            "node 0 1 1\n",
            "p2p 1 0\n",
            "p2p 1 0\nnode 0 1\n",
            "p2p 2 1\nnode 0 1 1\nnode 1 1 1\nedge 0 0\n",
            "p2p 2 2\nnode 0 1 1\nnode 1 1 1\nedge 0 1\nedge 1 0\n",
            "p2p 1 0\nnode 0 1 1 9\n",
            "p2p 1 0\nvertex 0\n",
        ] {
            assert!(parse_instance(bad).is_err(), "{bad:?}");
        }
    }

    fn arb_graph() -> impl Strategy<Value = OverlayGraph> {
        (1usize..12).prop_flat_map(|n| {
            (
                proptest::collection::vec((0..n, 0..n), 0..30),
                proptest::collection::vec(0u32..10, n),
                proptest::collection::vec(0u32..10, n),
            )
                .prop_map(move |(edges, cap, dem)| {
                    let mut g = OverlayGraph::new(n);
                    for (u, v) in edges {
                        if u != v {
                            g.add_edge(u, v).unwrap();
                        }
                    }
                    g.set_capacities(cap).unwrap();
                    g.set_demands(dem).unwrap();
                    g
                })
        })
    }

    proptest! {
        #[test]
        fn round_trip(g in arb_graph()) {
            let back = parse_instance(&render_instance(&g)).unwrap();
            back.validate().unwrap();
            prop_assert_eq!(back, g);
        }
    }
}
