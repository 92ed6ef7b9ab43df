//! Python bindings for `p2pcap`.

use std::time::Duration;

use p2pcap::bench::{run_battery, ExperimentConfig};
use p2pcap::dcda::{self, Cnf};
use p2pcap::heuristics::{self, GaConfig};
use p2pcap::overlay::{self, CapacityMode};
use p2pcap::{sra, DcdaInstance, Error, Forest, LatencyMatrix, OverlayGraph};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Undirected overlay with per-node capacity and demand.
#[pyclass(name = "OverlayGraph", module = "p2pcap_py", skip_from_py_object)]
#[derive(Clone)]
struct PyOverlayGraph {
    inner: OverlayGraph,
}

#[pymethods]
impl PyOverlayGraph {
    #[new]
    #[pyo3(signature = (n, edges=Vec::new(), capacity=None, demand=None))]
    fn new(n: usize, edges: Vec<(usize, usize)>, capacity: Option<Vec<u32>>, demand: Option<Vec<u32>>) -> PyResult<Self> {
        let inner = OverlayGraph::from_edges(
            n,
            &edges,
            capacity.unwrap_or_else(|| vec![0; n]),
            demand.unwrap_or_else(|| vec![0; n]),
        )
        .map_err(to_py)?;
        Ok(PyOverlayGraph { inner })
    }

    /// Parses the text instance format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyOverlayGraph {
            inner: overlay::parse_instance(text).map_err(to_py)?,
        })
    }

    /// kappa-NN overlay over `n` nodes sampled from a synthetic latency matrix.
    #[staticmethod]
    #[pyo3(signature = (n, kappa, seed, matrix_size=2500, cap_lo=2, cap_hi=4, balanced=false, demand=3))]
    #[allow(clippy::too_many_arguments)]
    fn knn(
        n: usize,
        kappa: usize,
        seed: u64,
        matrix_size: usize,
        cap_lo: u32,
        cap_hi: u32,
        balanced: bool,
        demand: u32,
    ) -> PyResult<Self> {
        let matrix = LatencyMatrix::synthetic(matrix_size, seed).map_err(to_py)?;
        let sample = overlay::sample_nodes(matrix.size(), n, seed).map_err(to_py)?;
        let mut g = overlay::build_knn_overlay(&matrix, &sample, kappa).map_err(to_py)?;
        let mode = if balanced {
            CapacityMode::Balanced { lo: cap_lo, hi: cap_hi }
        } else {
            CapacityMode::Uniform { lo: cap_lo, hi: cap_hi }
        };
        g.assign_capacities(mode, seed).map_err(to_py)?;
        g.assign_demands(demand);
        Ok(PyOverlayGraph { inner: g })
    }

    fn render(&self) -> String {
        overlay::render_instance(&self.inner)
    }

    fn add_edge(&mut self, u: usize, v: usize) -> PyResult<bool> {
        self.inner.add_edge(u, v).map_err(to_py)
    }

    fn set_capacity(&mut self, u: usize, c: u32) {
        self.inner.set_capacity(u, c);
    }

    fn set_demand(&mut self, u: usize, d: u32) {
        self.inner.set_demand(u, d);
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    #[getter]
    fn capacities(&self) -> Vec<u32> {
        self.inner.capacities().to_vec()
    }

    #[getter]
    fn demands(&self) -> Vec<u32> {
        self.inner.demands().to_vec()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    fn neighbors(&self, u: usize) -> PyResult<Vec<usize>> {
        if u >= self.inner.node_count() {
            return Err(PyValueError::new_err(format!("node {u} out of range")));
        }
        Ok(self.inner.neighbors(u).to_vec())
    }

    fn __repr__(&self) -> String {
        format!(
            "OverlayGraph(n={}, edges={})",
            self.inner.node_count(),
            self.inner.edge_count()
        )
    }
}

/// Result of the stationary-regime allocation.
#[pyclass(name = "SraResult", module = "p2pcap_py", get_all)]
struct PySraResult {
    satisfiable: bool,
    flow: u64,
    demand: u64,
    ratio: f64,
    /// `(sender, receiver, weight)` for every nonzero weight.
    allocation: Vec<(usize, usize, u64)>,
}

#[pymethods]
impl PySraResult {
    fn __repr__(&self) -> String {
        format!(
            "SraResult(satisfiable={}, flow={}, demand={}, ratio={})",
            self.satisfiable, self.flow, self.demand, self.ratio
        )
    }
}

/// Max-flow allocation meeting as much demand as the capacities allow.
#[pyfunction]
fn sra_decide(graph: PyRef<'_, PyOverlayGraph>) -> PySraResult {
    let out = sra::sra_decide(&graph.inner);
    PySraResult {
        satisfiable: out.satisfiable,
        flow: out.flow_value,
        demand: out.total_demand,
        ratio: out.ratio,
        allocation: out.allocation.iter().map(|((u, v), w)| (u, v, w)).collect(),
    }
}

/// K trees rooted at `source` sharing per-node capacities.
#[pyclass(name = "DcdaInstance", module = "p2pcap_py")]
struct PyDcdaInstance {
    inner: DcdaInstance,
}

#[pymethods]
impl PyDcdaInstance {
    #[new]
    #[pyo3(signature = (graph, source, k=1))]
    fn new(graph: PyRef<'_, PyOverlayGraph>, source: usize, k: usize) -> PyResult<Self> {
        Ok(PyDcdaInstance {
            inner: DcdaInstance::new(graph.inner.clone(), source, k).map_err(to_py)?,
        })
    }

    #[getter]
    fn source(&self) -> usize {
        self.inner.source()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn graph(&self) -> PyOverlayGraph {
        PyOverlayGraph {
            inner: self.inner.graph().clone(),
        }
    }

    fn ratio(&self, score: usize) -> f64 {
        self.inner.ratio(score)
    }

    fn __repr__(&self) -> String {
        format!(
            "DcdaInstance(n={}, source={}, k={})",
            self.inner.node_count(),
            self.inner.source(),
            self.inner.k()
        )
    }
}

#[pyclass(name = "Forest", module = "p2pcap_py")]
struct PyForest {
    inner: Forest,
}

#[pymethods]
impl PyForest {
    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    /// Non-source members summed over trees.
    #[getter]
    fn score(&self) -> usize {
        self.inner.member_count()
    }

    fn parent(&self, tree: usize, v: usize) -> Option<usize> {
        self.inner.parent(tree, v)
    }

    fn contains(&self, tree: usize, v: usize) -> bool {
        self.inner.contains(tree, v)
    }

    /// `(child, parent)` pairs of one tree.
    fn edges(&self, tree: usize) -> Vec<(usize, usize)> {
        self.inner.edges(tree).collect()
    }

    fn validate(&self, instance: PyRef<'_, PyDcdaInstance>) -> PyResult<()> {
        self.inner.validate(&instance.inner).map_err(to_py)
    }

    fn render(&self) -> String {
        self.inner.render()
    }

    fn __repr__(&self) -> String {
        format!("Forest(k={}, score={})", self.inner.k(), self.inner.member_count())
    }
}

fn forest(inner: Forest) -> PyForest {
    PyForest { inner }
}

/// Exact search; returns `(forest, proven_optimal)`.
#[pyfunction]
#[pyo3(signature = (instance, budget=None))]
fn branch_and_bound(py: Python<'_>, instance: PyRef<'_, PyDcdaInstance>, budget: Option<f64>) -> PyResult<(PyForest, bool)> {
    let budget = budget
        .map(Duration::try_from_secs_f64)
        .transpose()
        .map_err(|e| PyValueError::new_err(format!("budget: {e}")))?;
    let inst = instance.inner.clone();
    let out = py.detach(move || dcda::branch_and_bound(&inst, budget));
    Ok((forest(out.forest), out.proven_optimal))
}

/// Single-tree optimum via the level decomposition.
#[pyfunction]
fn solve_benders(instance: PyRef<'_, PyDcdaInstance>) -> PyResult<PyForest> {
    Ok(forest(dcda::solve_p1_benders(&instance.inner).map_err(to_py)?.forest))
}

#[pyfunction]
fn brute_force(instance: PyRef<'_, PyDcdaInstance>) -> PyResult<PyForest> {
    Ok(forest(dcda::brute_force(&instance.inner).map_err(to_py)?.0))
}

#[pyfunction]
fn greedy(instance: PyRef<'_, PyDcdaInstance>, seed: u64) -> PyForest {
    forest(heuristics::greedy(&instance.inner, seed))
}

#[pyfunction]
fn random_variant(instance: PyRef<'_, PyDcdaInstance>, seed: u64) -> PyForest {
    forest(heuristics::random_variant(&instance.inner, seed))
}

#[pyfunction]
fn prefixed_variant(instance: PyRef<'_, PyDcdaInstance>, seed: u64) -> PyForest {
    forest(heuristics::prefixed_variant(&instance.inner, seed))
}

#[pyfunction]
#[pyo3(signature = (instance, seed, population=150, generations=300))]
fn genetic(
    py: Python<'_>,
    instance: PyRef<'_, PyDcdaInstance>,
    seed: u64,
    population: usize,
    generations: usize,
) -> PyResult<PyForest> {
    if population < 2 {
        return Err(PyValueError::new_err("population must be at least 2"));
    }
    let config = GaConfig {
        population,
        generations,
        ..GaConfig::default()
    };
    let inst = instance.inner.clone();
    Ok(forest(py.detach(move || heuristics::genetic(&inst, &config, seed))))
}

/// Builds the single-tree instance of a 3-CNF formula given as DIMACS-signed
/// clauses. Returns `(instance, gamma)`.
#[pyfunction]
fn sat_to_dcda(num_vars: usize, clauses: Vec<Vec<i64>>) -> PyResult<(PyDcdaInstance, usize)> {
    let refs: Vec<&[i64]> = clauses.iter().map(Vec::as_slice).collect();
    let cnf = Cnf::from_dimacs_clauses(num_vars, &refs).map_err(to_py)?;
    let red = dcda::sat_to_dcda(&cnf).map_err(to_py)?;
    Ok((PyDcdaInstance { inner: red.instance }, red.gamma))
}

/// Runs a battery described by config text; returns `(rows_csv, aggregate_csv)`.
#[pyfunction]
#[pyo3(signature = (config, jobs=0))]
fn run_bench(py: Python<'_>, config: &str, jobs: usize) -> PyResult<(String, String)> {
    let cfg = ExperimentConfig::parse(config).map_err(to_py)?;
    let report = py
        .detach(move || {
            let matrix = LatencyMatrix::synthetic(cfg.matrix_size, cfg.seed)?;
            run_battery(&cfg, &matrix, jobs)
        })
        .map_err(to_py)?;
    Ok((report.rows_csv(), report.aggregate_csv()))
}

#[pymodule]
fn p2pcap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOverlayGraph>()?;
    m.add_class::<PySraResult>()?;
    m.add_class::<PyDcdaInstance>()?;
    m.add_class::<PyForest>()?;
    m.add_function(wrap_pyfunction!(sra_decide, m)?)?;
    m.add_function(wrap_pyfunction!(branch_and_bound, m)?)?;
    m.add_function(wrap_pyfunction!(solve_benders, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force, m)?)?;
    m.add_function(wrap_pyfunction!(greedy, m)?)?;
    m.add_function(wrap_pyfunction!(random_variant, m)?)?;
    m.add_function(wrap_pyfunction!(prefixed_variant, m)?)?;
    m.add_function(wrap_pyfunction!(genetic, m)?)?;
    m.add_function(wrap_pyfunction!(sat_to_dcda, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    Ok(())
}
