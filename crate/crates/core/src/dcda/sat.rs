//! 3-CNF formulas and their encoding as single-tree DCDA instances.
//!
//! Each variable gets a gadget node of capacity 1 hanging off the source
//! and two literal nodes below it, so a tree can include only one literal per
//! variable. Clause nodes have capacity 0 and are adjacent to their three
//! literals. A tree covering every gadget, one literal per variable, and
//! every clause exists iff the formula is satisfiable.

use std::fmt;

use super::DcdaInstance;
use crate::error::{Error, Result};
use crate::overlay::{NodeId, OverlayGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    /// 1-based variable index.
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn from_dimacs(x: i64) -> Option<Self> {
        (x != 0).then(|| Literal {
            var: x.unsigned_abs() as usize,
            negated: x < 0,
        })
    }

    pub fn to_dimacs(self) -> i64 {
        if self.negated {
            -(self.var as i64)
        } else {
            self.var as i64
        }
    }

    pub fn eval(self, assignment: &[bool]) -> bool {
        assignment[self.var - 1] != self.negated
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: usize,
    pub clauses: Vec<Vec<Literal>>,
}

impl Cnf {
    pub fn new(num_vars: usize, clauses: Vec<Vec<Literal>>) -> Result<Self> {
        for (j, clause) in clauses.iter().enumerate() {
            if let Some(l) = clause.iter().find(|l| l.var == 0 || l.var > num_vars) {
                return Err(Error::invalid(format!(
                    "clause {j} uses variable {} outside 1..={num_vars}",
                    l.var
                )));
            }
        }
        Ok(Cnf { num_vars, clauses })
    }

    /// Builds a formula from DIMACS-style signed integers per clause.
    pub fn from_dimacs_clauses(num_vars: usize, clauses: &[&[i64]]) -> Result<Self> {
        let clauses = clauses
            .iter()
            .map(|c| {
                c.iter()
                    .map(|&x| Literal::from_dimacs(x).ok_or_else(|| Error::invalid("literal 0")))
                    .collect()
            })
            .collect::<Result<_>>()?;
        Cnf::new(num_vars, clauses)
    }

    /// Parses the DIMACS CNF format (`c` comments, `p cnf <vars> <clauses>`,
    /// zero-terminated clauses).
    pub fn parse_dimacs(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize, usize)> = None;
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        let mut last_line = 1;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            last_line = line;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('c') || trimmed.starts_with('%') {
                continue;
            }
            if trimmed.starts_with('p') {
                if header.is_some() {
                    return Err(Error::parse(line, "duplicate problem line"));
                }
                let f: Vec<_> = trimmed.split_whitespace().collect();
                if f.len() != 4 || f[1] != "cnf" {
                    return Err(Error::parse(line, "expected `p cnf <vars> <clauses>`"));
                }
                let v = f[2].parse().map_err(|_| Error::parse(line, "bad variable count"))?;
                let c = f[3].parse().map_err(|_| Error::parse(line, "bad clause count"))?;
                header = Some((v, c, line));
                continue;
            }
            let Some((num_vars, _, _)) = header else {
                return Err(Error::parse(line, "clause before problem line"));
            };
            for tok in trimmed.split_whitespace() {
                let x: i64 = tok
                    .parse()
                    .map_err(|_| Error::parse(line, format!("bad literal `{tok}`")))?;
                match Literal::from_dimacs(x) {
                    None => clauses.push(std::mem::take(&mut current)),
                    Some(l) if l.var > num_vars => {
                        return Err(Error::parse(line, format!("variable {} out of range", l.var)));
                    }
                    Some(l) => current.push(l),
                }
            }
        }
        let (num_vars, declared, header_line) =
            header.ok_or_else(|| Error::parse(last_line, "missing problem line"))?;
        if !current.is_empty() {
            clauses.push(current);
        }
        if clauses.len() != declared {
            return Err(Error::parse(
                header_line,
                format!("declared {declared} clauses, found {}", clauses.len()),
            ));
        }
        Cnf::new(num_vars, clauses)
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| l.eval(assignment)))
    }

    /// Exhaustive search over all assignments; returns a model if one exists.
    pub fn solve_brute_force(&self) -> Option<Vec<bool>> {
        assert!(self.num_vars < 32, "brute-force SAT limited to < 32 variables");
        (0u64..1 << self.num_vars)
            .map(|mask| (0..self.num_vars).map(|i| mask >> i & 1 == 1).collect::<Vec<_>>())
            .find(|a| self.eval(a))
    }
}

impl fmt::Display for Cnf {
    /// DIMACS text.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p cnf {} {}", self.num_vars, self.clauses.len())?;
        for clause in &self.clauses {
            for l in clause {
                write!(f, "{} ", l.to_dimacs())?;
            }
            writeln!(f, "0")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SatReduction {
    pub instance: DcdaInstance,
    /// Target tree size, counting the source.
    pub gamma: usize,
    num_vars: usize,
}

impl SatReduction {
    pub fn gadget(&self, var: usize) -> NodeId {
        1 + 3 * (var - 1)
    }

    pub fn literal(&self, lit: Literal) -> NodeId {
        self.gadget(lit.var) + 1 + lit.negated as usize
    }

    pub fn clause(&self, j: usize) -> NodeId {
        1 + 3 * self.num_vars + j
    }
}

/// Encodes a 3-CNF formula. Every clause needs three distinct literals.
pub fn sat_to_dcda(cnf: &Cnf) -> Result<SatReduction> {
    let n = cnf.num_vars;
    let m = cnf.clauses.len();
    for (j, clause) in cnf.clauses.iter().enumerate() {
        if clause.len() != 3 {
            return Err(Error::invalid(format!(
                "clause {j} has {} literals, expected 3",
                clause.len()
            )));
        }
        let mut sorted = clause.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != 3 {
            return Err(Error::invalid(format!("clause {j} repeats a literal")));
        }
    }
    let mut red = SatReduction {
        instance: DcdaInstance::new(OverlayGraph::new(1), 0, 1)?,
        gamma: 1 + 2 * n + m,
        num_vars: n,
    };
    let mut graph = OverlayGraph::new(1 + 3 * n + m);
    graph.assign_demands(1);
    graph.set_capacity(0, n as u32);
    for var in 1..=n {
        let gadget = red.gadget(var);
        graph.add_edge(0, gadget)?;
        graph.set_capacity(gadget, 1);
        for negated in [false, true] {
            let lit = red.literal(Literal { var, negated });
            graph.add_edge(gadget, lit)?;
            graph.set_capacity(lit, m as u32);
        }
    }
    for (j, clause) in cnf.clauses.iter().enumerate() {
        for &lit in clause {
            graph.add_edge(red.literal(lit), red.clause(j))?;
        }
    }
    red.instance = DcdaInstance::new(graph, 0, 1)?;
    Ok(red)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_clause_layout() {
        let cnf = Cnf::from_dimacs_clauses(3, &[&[1, 2, 3]]).unwrap();
        let red = sat_to_dcda(&cnf).unwrap();
        let g = red.instance.graph();
        assert_eq!(g.node_count(), 11);
        assert_eq!(red.gamma, 8);
        assert_eq!(g.capacity(0), 3);
        assert_eq!(g.capacity(red.gadget(2)), 1);
        assert_eq!(g.capacity(red.literal(Literal { var: 2, negated: true })), 1);
        assert_eq!(g.capacity(red.clause(0)), 0);
        assert_eq!(g.degree(red.clause(0)), 3);
        // s-i (3), i-x_i and i-not x_i (6), literal-clause (3)
        assert_eq!(g.edge_count(), 12);
    }

    #[test]
    fn clause_width_is_checked() {
        let cnf = Cnf::from_dimacs_clauses(3, &[&[1, 2]]).unwrap();
        assert!(matches!(sat_to_dcda(&cnf), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn one_variable_cannot_fill_a_clause() {
        let cnf = Cnf::from_dimacs_clauses(1, &[&[1, -1, 1]]).unwrap();
        assert!(sat_to_dcda(&cnf).is_err());
    }

    #[test]
    fn dimacs_round_trip() {
        let text = "c example\np cnf 3 2\n1 -2 3 0\n-1 2\n-3 0\n";
        let cnf = Cnf::parse_dimacs(text).unwrap();
        assert_eq!(cnf.clauses.len(), 2);
        assert_eq!(cnf.clauses[1].len(), 3);
        assert_eq!(Cnf::parse_dimacs(&cnf.to_string()).unwrap(), cnf);
    }

    #[test]
    fn dimacs_errors() {
        assert!(Cnf::parse_dimacs("1 2 3 0\n").is_err());
        assert!(Cnf::parse_dimacs("p cnf 2 1\n1 3 0\n").is_err());
        assert!(Cnf::parse_dimacs("p cnf 2 2\n1 2 0\n").is_err());
        assert!(matches!(
            Cnf::parse_dimacs("p cnf 2 1\n1 x 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn brute_force_sat() {
        let all: Vec<Vec<i64>> = (0..8)
            .map(|mask| (1..=3).map(|v| if mask >> (v - 1) & 1 == 1 { -v } else { v }).collect())
            .collect();
        let refs: Vec<&[i64]> = all.iter().map(Vec::as_slice).collect();
        assert!(Cnf::from_dimacs_clauses(3, &refs).unwrap().solve_brute_force().is_none());
        assert!(Cnf::from_dimacs_clauses(3, &refs[..7]).unwrap().solve_brute_force().is_some());
    }
}
