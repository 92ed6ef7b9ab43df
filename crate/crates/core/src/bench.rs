//! Seeded experiment batteries.
//!
//! A battery is a list of points (an `(n, kappa)` pair each), and for every
//! point `reps` instances are generated: nodes are sampled from a latency
//! matrix, joined into a kappa-NN overlay, given capacities and demands, and
//! a source is drawn. Every configured algorithm then runs on each instance.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dcda::{branch_and_bound, DcdaInstance};
use crate::error::{Error, Result};
use crate::heuristics::{self, GaConfig};
use crate::overlay::{build_knn_overlay, sample_nodes, CapacityMode, LatencyMatrix, OverlayGraph};
use crate::sra::sra_decide;

pub const MIN_REPS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Battery {
    /// Varies the population size.
    LargeN,
    /// Varies kappa at fixed population.
    Density,
    /// Tiny populations, where exact solutions are affordable.
    SmallN,
}

impl Battery {
    pub fn name(self) -> &'static str {
        match self {
            Battery::LargeN => "large-n",
            Battery::Density => "density",
            Battery::SmallN => "small-n",
        }
    }
}

impl FromStr for Battery {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "large-n" => Ok(Battery::LargeN),
            "density" => Ok(Battery::Density),
            "small-n" => Ok(Battery::SmallN),
            _ => Err(Error::invalid(format!("unknown battery `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// Max-flow allocation in the stationary regime.
    Sra,
    /// Branch and bound under the time budget.
    Exact,
    Greedy,
    Random,
    Prefixed,
    Genetic,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sra => "sra",
            Algorithm::Exact => "exact",
            Algorithm::Greedy => "greedy",
            Algorithm::Random => "random",
            Algorithm::Prefixed => "prefixed",
            Algorithm::Genetic => "ga",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sra" => Ok(Algorithm::Sra),
            "exact" => Ok(Algorithm::Exact),
            "greedy" => Ok(Algorithm::Greedy),
            "random" => Ok(Algorithm::Random),
            "prefixed" => Ok(Algorithm::Prefixed),
            "ga" => Ok(Algorithm::Genetic),
            _ => Err(Error::invalid(format!("unknown algorithm `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub battery: Battery,
    pub n_list: Vec<usize>,
    pub kappa_list: Vec<usize>,
    pub capacity: CapacityMode,
    pub k: usize,
    pub demand: u32,
    /// Instances per point.
    pub reps: usize,
    pub seed: u64,
    pub algos: Vec<Algorithm>,
    /// Time limit of the exact solver, per instance.
    pub budget: Duration,
    pub ga: GaConfig,
    /// The genetic search only runs on the first `ga_reps` instances of a point.
    pub ga_reps: usize,
    /// Size of the synthetic latency matrix when none is supplied.
    pub matrix_size: usize,
    /// When off, runtimes are reported as zero so reruns are byte-identical.
    pub timing: bool,
}

impl ExperimentConfig {
    /// Default settings of each battery.
    pub fn preset(battery: Battery) -> Self {
        let base = ExperimentConfig {
            battery,
            n_list: (1..=10).map(|i| i * 100).collect(),
            kappa_list: vec![6],
            capacity: CapacityMode::Balanced { lo: 2, hi: 4 },
            k: 3,
            demand: 3,
            reps: MIN_REPS,
            seed: 1,
            algos: vec![Algorithm::Sra, Algorithm::Greedy, Algorithm::Random, Algorithm::Prefixed],
            budget: Duration::from_secs(60),
            ga: GaConfig::default(),
            ga_reps: MIN_REPS,
            matrix_size: 2500,
            timing: true,
        };
        match battery {
            Battery::LargeN => base,
            Battery::Density => ExperimentConfig {
                n_list: vec![200],
                kappa_list: (3..=15).collect(),
                ..base
            },
            Battery::SmallN => ExperimentConfig {
                n_list: (6..=15).collect(),
                kappa_list: vec![3],
                capacity: CapacityMode::Uniform { lo: 0, hi: 6 },
                algos: vec![Algorithm::Exact, Algorithm::Greedy, Algorithm::Genetic],
                ..base
            },
        }
    }

    /// Reads a line-oriented `key value` file. Keys not given keep the
    /// battery's preset value; `battery` itself is required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(usize, &str, Vec<&str>)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty());
            let key = tokens.next().unwrap_or("");
            let values: Vec<&str> = tokens.collect();
            if values.is_empty() {
                return Err(Error::parse(idx + 1, format!("`{key}` has no value")));
            }
            entries.push((idx + 1, key, values));
        }
        let battery = entries
            .iter()
            .find(|(_, k, _)| *k == "battery")
            .ok_or_else(|| Error::parse(0, "missing `battery`"))?;
        let mut cfg = Self::preset(battery.2[0].parse().map_err(|e: Error| Error::parse(battery.0, e.to_string()))?);
        let (mut lo, mut hi, mut balanced) = match cfg.capacity {
            CapacityMode::Uniform { lo, hi } => (lo, hi, false),
            CapacityMode::Balanced { lo, hi } => (lo, hi, true),
            CapacityMode::Constant(c) => (c, c, false),
        };
        let mut ga_reps = None;
        for (line, key, values) in &entries {
            let line = *line;
            let one = || -> Result<&str> {
                match values.as_slice() {
                    [v] => Ok(v),
                    _ => Err(Error::parse(line, format!("`{key}` takes a single value"))),
                }
            };
            match *key {
                "battery" => {
                    one()?;
                }
                "n_list" => cfg.n_list = parse_list(line, values)?,
                "kappa_list" => cfg.kappa_list = parse_list(line, values)?,
                "cap_lo" => lo = parse_num(line, one()?)?,
                "cap_hi" => hi = parse_num(line, one()?)?,
                "cap_mode" => {
                    balanced = match one()? {
                        "balanced" => true,
                        "uniform" => false,
                        v => return Err(Error::parse(line, format!("cap_mode is `uniform` or `balanced`, got `{v}`"))),
                    }
                }
                "K" => cfg.k = parse_num(line, one()?)?,
                "demand" => cfg.demand = parse_num(line, one()?)?,
                "reps" => cfg.reps = parse_num(line, one()?)?,
                "seed" => cfg.seed = parse_num(line, one()?)?,
                "algos" => {
                    cfg.algos = values
                        .iter()
                        .map(|v| v.parse().map_err(|e: Error| Error::parse(line, e.to_string())))
                        .collect::<Result<_>>()?
                }
                "budget_sec" => {
                    let secs: f64 = parse_num(line, one()?)?;
                    cfg.budget = Duration::try_from_secs_f64(secs)
                        .map_err(|_| Error::parse(line, format!("bad budget `{secs}`")))?;
                }
                "ga_pop" => cfg.ga.population = parse_num(line, one()?)?,
                "ga_gens" => cfg.ga.generations = parse_num(line, one()?)?,
                "ga_reps" => ga_reps = Some(parse_num(line, one()?)?),
                "matrix_size" => cfg.matrix_size = parse_num(line, one()?)?,
                "timing" => {
                    cfg.timing = match one()? {
                        "on" => true,
                        "off" => false,
                        v => return Err(Error::parse(line, format!("timing is `on` or `off`, got `{v}`"))),
                    }
                }
                _ => return Err(Error::parse(line, format!("unknown key `{key}`"))),
            }
        }
        cfg.capacity = match (lo == hi, balanced) {
            (true, _) => CapacityMode::Constant(lo),
            (false, true) => CapacityMode::Balanced { lo, hi },
            (false, false) => CapacityMode::Uniform { lo, hi },
        };
        cfg.ga_reps = ga_reps.unwrap_or(cfg.reps);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < MIN_REPS {
            return Err(Error::invalid(format!("reps must be at least {MIN_REPS}, got {}", self.reps)));
        }
        if self.n_list.is_empty() || self.kappa_list.is_empty() || self.algos.is_empty() {
            return Err(Error::invalid("n_list, kappa_list and algos must not be empty"));
        }
        match self.battery {
            Battery::LargeN | Battery::SmallN if self.kappa_list.len() != 1 => {
                return Err(Error::invalid(format!("{} uses a single kappa", self.battery.name())))
            }
            Battery::Density if self.n_list.len() != 1 => {
                return Err(Error::invalid("density uses a single n"))
            }
            _ => {}
        }
        if let CapacityMode::Uniform { lo, hi } | CapacityMode::Balanced { lo, hi } = self.capacity {
            if lo > hi {
                return Err(Error::invalid(format!("cap_lo {lo} exceeds cap_hi {hi}")));
            }
        }
        if self.k == 0 {
            return Err(Error::invalid("K must be positive"));
        }
        if self.algos.contains(&Algorithm::Genetic) && self.ga.population < 2 {
            return Err(Error::invalid("ga_pop must be at least 2"));
        }
        for &kappa in &self.kappa_list {
            if kappa == 0 || self.n_list.iter().any(|&n| kappa >= n) {
                return Err(Error::invalid(format!("kappa {kappa} must lie in [1, n)")));
            }
        }
        Ok(())
    }

    /// `(n, kappa)` for every point, in battery order.
    pub fn points(&self) -> Vec<(usize, usize)> {
        self.n_list
            .iter()
            .flat_map(|&n| self.kappa_list.iter().map(move |&kappa| (n, kappa)))
            .collect()
    }

    /// Value identifying a point in the output: kappa for the density
    /// battery, n otherwise.
    pub fn point_label(&self, (n, kappa): (usize, usize)) -> usize {
        match self.battery {
            Battery::Density => kappa,
            _ => n,
        }
    }

    pub fn instance_seed(&self, rep: usize) -> u64 {
        self.seed.wrapping_add(rep as u64)
    }
}

fn parse_num<T: FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::parse(line, format!("bad number `{s}`")))
}

fn parse_list(line: usize, values: &[&str]) -> Result<Vec<usize>> {
    values.iter().map(|v| parse_num(line, v)).collect()
}

/// One generated instance of a battery.
#[derive(Clone, Debug)]
pub struct BenchInstance {
    pub graph: OverlayGraph,
    pub dcda: DcdaInstance,
}

/// Deterministic instance for `(n, kappa)` and `seed`.
pub fn generate_instance(
    config: &ExperimentConfig,
    matrix: &LatencyMatrix,
    (n, kappa): (usize, usize),
    seed: u64,
) -> Result<BenchInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 32) | kappa as u64);
    let sample = sample_nodes(matrix.size(), n, rng.gen())?;
    let mut graph = build_knn_overlay(matrix, &sample, kappa)?;
    graph.assign_capacities(config.capacity, rng.gen())?;
    graph.assign_demands(config.demand);
    let source = rng.gen_range(0..n);
    let dcda = DcdaInstance::new(graph.clone(), source, config.k)?;
    Ok(BenchInstance { graph, dcda })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    /// Point label (n or kappa).
    pub point: usize,
    pub algo: Algorithm,
    pub seed: u64,
    pub ratio: f64,
    pub runtime_ms: f64,
    /// The exact solver hit its budget; `ratio` is its best solution so far.
    pub timed_out: bool,
    /// Source drawn for the instance.
    pub source: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub point: usize,
    pub algo: Algorithm,
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub battery: Battery,
    pub rows: Vec<ReportRow>,
    pub aggregates: Vec<Aggregate>,
}

impl ExperimentReport {
    pub fn empty(battery: Battery) -> Self {
        ExperimentReport {
            battery,
            rows: Vec::new(),
            aggregates: Vec::new(),
        }
    }

    fn from_rows(battery: Battery, rows: Vec<ReportRow>) -> Self {
        let mut groups: BTreeMap<(usize, Algorithm), Vec<f64>> = BTreeMap::new();
        let mut order = Vec::new();
        for r in &rows {
            let key = (r.point, r.algo);
            if !groups.contains_key(&key) {
                order.push(key);
            }
            groups.entry(key).or_default().push(r.ratio);
        }
        let aggregates = order
            .into_iter()
            .map(|key| {
                let v = &groups[&key];
                let count = v.len();
                let mean = v.iter().sum::<f64>() / count as f64;
                let var = if count > 1 {
                    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64
                } else {
                    0.0
                };
                Aggregate {
                    point: key.0,
                    algo: key.1,
                    mean,
                    std: var.sqrt(),
                    min: v.iter().copied().fold(f64::INFINITY, f64::min),
                    max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    count,
                }
            })
            .collect();
        ExperimentReport {
            battery,
            rows,
            aggregates,
        }
    }

    pub fn aggregate(&self, point: usize, algo: Algorithm) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.point == point && a.algo == algo)
    }

    pub fn rows_for(&self, point: usize, algo: Algorithm) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.point == point && r.algo == algo)
    }

    pub fn rows_csv(&self) -> String {
        let mut out = String::from("battery,point,algo,seed,ratio,runtime_ms\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                self.battery.name(),
                r.point,
                r.algo.name(),
                r.seed,
                r.ratio,
                r.runtime_ms
            );
        }
        out
    }

    pub fn aggregate_csv(&self) -> String {
        let mut out = String::from("point,algo,mean,std,min,max,count\n");
        for a in &self.aggregates {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                a.point,
                a.algo.name(),
                a.mean,
                a.std,
                a.min,
                a.max,
                a.count
            );
        }
        out
    }
}

/// Runs every algorithm on every instance of the battery on `jobs` worker
/// threads (all cores when zero). Rows come out in (point, algorithm, seed)
/// order whatever the scheduling.
pub fn run_battery(config: &ExperimentConfig, matrix: &LatencyMatrix, jobs: usize) -> Result<ExperimentReport> {
    config.validate()?;
    let points = config.points();
    if let Some(&(n, _)) = points.iter().find(|(n, _)| *n > matrix.size()) {
        return Err(Error::invalid(format!("n = {n} exceeds the latency matrix size {}", matrix.size())));
    }
    let tasks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..config.reps).map(move |rep| (p, rep)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<Vec<(usize, usize, ReportRow)>>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(p, rep)| run_instance(config, matrix, points[p], rep).map(|rows| {
                rows.into_iter()
                    .map(|(a, row)| (p, a, row))
                    .collect()
            }))
            .collect()
    });
    let mut keyed = Vec::new();
    for r in results {
        keyed.extend(r?);
    }
    keyed.sort_by_key(|(p, a, row)| (*p, *a, row.seed));
    Ok(ExperimentReport::from_rows(
        config.battery,
        keyed.into_iter().map(|(_, _, row)| row).collect(),
    ))
}

/// Rows of one instance, tagged with the algorithm's position in the config.
fn run_instance(
    config: &ExperimentConfig,
    matrix: &LatencyMatrix,
    point: (usize, usize),
    rep: usize,
) -> Result<Vec<(usize, ReportRow)>> {
    let seed = config.instance_seed(rep);
    let inst = generate_instance(config, matrix, point, seed)?;
    let mut rows = Vec::new();
    for (idx, &algo) in config.algos.iter().enumerate() {
        if algo == Algorithm::Genetic && rep >= config.ga_reps {
            continue;
        }
        let start = Instant::now();
        let (ratio, timed_out) = match algo {
            Algorithm::Sra => (sra_decide(&inst.graph).ratio, false),
            Algorithm::Exact => {
                let out = branch_and_bound(&inst.dcda, Some(config.budget));
                (inst.dcda.ratio(out.score), !out.proven_optimal)
            }
            Algorithm::Greedy => (inst.dcda.ratio(heuristics::greedy(&inst.dcda, seed).member_count()), false),
            Algorithm::Random => (
                inst.dcda.ratio(heuristics::random_variant(&inst.dcda, seed).member_count()),
                false,
            ),
            Algorithm::Prefixed => (
                inst.dcda.ratio(heuristics::prefixed_variant(&inst.dcda, seed).member_count()),
                false,
            ),
            Algorithm::Genetic => (
                inst.dcda.ratio(heuristics::genetic(&inst.dcda, &config.ga, seed).member_count()),
                false,
            ),
        };
        let runtime_ms = if config.timing {
            start.elapsed().as_secs_f64() * 1000.0
        } else {
            0.0
        };
        rows.push((
            idx,
            ReportRow {
                point: config.point_label(point),
                algo,
                seed,
                ratio,
                runtime_ms,
                timed_out,
                source: inst.dcda.source(),
            },
        ));
    }
    Ok(rows)
}

/// Writes `rows.csv` and `aggregate.csv` into `dir`, creating it if needed.
pub fn emit_csv(report: &ExperimentReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, body) in [("rows.csv", report.rows_csv()), ("aggregate.csv", report.aggregate_csv())] {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
