//! Command-line front end.
//!
//! Exit codes: 0 on success (an unsatisfiable instance is still a success),
//! 2 on usage errors, 3 when an input file cannot be read or parsed.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use crate::bench::{emit_csv, run_battery, ExperimentConfig};
use crate::dcda::{branch_and_bound, brute_force, sat_to_dcda, solve_p1_benders, Cnf, DcdaInstance, Forest};
use crate::error::Error;
use crate::heuristics::{self, GaConfig};
use crate::overlay::{
    build_knn_overlay, read_instance, read_latency_matrix, render_instance, sample_nodes, CapacityMode,
    LatencyMatrix,
};
use crate::sra::sra_decide;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "p2pcap", version, about = "Resource allocation in peer-to-peer overlays")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide whether every demand can be met in the stationary regime.
    ///
    /// Instance files hold `p2p <n> <m>`, then `node <id> <capacity> <demand>`
    /// per node and `edge <u> <v>` per undirected edge; `#` starts a comment.
    Sra {
        #[arg(long)]
        instance: PathBuf,
        /// Write the allocation as `w <u> <v> <weight>` lines to this file.
        #[arg(long)]
        emit_allocation: Option<PathBuf>,
    },
    /// Solve the K-tree problem exactly.
    DcdaExact {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 0)]
        source: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, value_enum, default_value_t = Method::Bb)]
        method: Method,
        /// Time limit in seconds for `bb`.
        #[arg(long)]
        budget: Option<f64>,
        /// Also print the trees as `tree <k> <child> <parent>` lines.
        #[arg(long)]
        forest: bool,
    },
    /// Build K trees with a heuristic.
    DcdaHeur {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 0)]
        source: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long)]
        seed: u64,
        /// Population size of `ga`.
        #[arg(long, default_value_t = 150)]
        pop: usize,
        /// Generations of `ga`.
        #[arg(long, default_value_t = 300)]
        gens: usize,
        #[arg(long)]
        forest: bool,
    },
    /// Turn a DIMACS 3-CNF formula into a single-tree instance whose best
    /// tree has `gamma` nodes (source included) iff the formula is satisfiable.
    ReduceSat {
        #[arg(long)]
        cnf: PathBuf,
        /// Where to write the instance; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a kappa-NN overlay from a latency matrix.
    ///
    /// Matrix files start with the size `m`, followed by `m` rows of `m` reals.
    GenOverlay {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        kappa: usize,
        #[arg(long)]
        seed: u64,
        /// Latency matrix file; a synthetic Euclidean matrix otherwise.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, default_value_t = 2500)]
        matrix_size: usize,
        #[arg(long, default_value_t = 2)]
        cap_lo: u32,
        #[arg(long, default_value_t = 4)]
        cap_hi: u32,
        /// `uniform` draws every capacity independently; `balanced` uses each
        /// value of the range equally often.
        #[arg(long, value_enum, default_value_t = CapMode::Uniform)]
        cap_mode: CapMode,
        #[arg(long, default_value_t = 3)]
        demand: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment battery and write `rows.csv` and `aggregate.csv`.
    ///
    /// The config file holds `key value` lines: battery (large-n, density,
    /// small-n), n_list, kappa_list, cap_lo, cap_hi, cap_mode, K, demand, reps, seed,
    /// algos (sra exact greedy random prefixed ga), budget_sec, ga_pop,
    /// ga_gens, ga_reps, matrix_size, timing (on/off).
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Worker threads; all cores when 0.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Bb,
    Benders,
    Brute,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CapMode {
    Uniform,
    Balanced,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Greedy,
    Random,
    Prefixed,
    Ga,
}

struct Failure {
    code: i32,
    message: String,
}

fn usage(e: Error) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: e.to_string(),
    }
}

fn input(path: &Path) -> impl FnOnce(Error) -> Failure + '_ {
    move |e| Failure {
        code: EXIT_INPUT,
        message: match e {
            Error::Io { .. } => e.to_string(),
            _ => format!("{}: {e}", path.display()),
        },
    }
}

fn write_err(e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: e.to_string(),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Results go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{rendered}");
                EXIT_OK
            };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn load_instance(path: &Path, source: usize, k: usize) -> Result<DcdaInstance, Failure> {
    let graph = read_instance(path).map_err(input(path))?;
    DcdaInstance::new(graph, source, k).map_err(usage)
}

fn summary(out: &mut dyn Write, inst: &DcdaInstance, forest: &Forest, optimal: bool, show: bool) -> Result<(), Failure> {
    let score = forest.member_count();
    writeln!(out, "score {score} ratio {:?} optimal {optimal}", inst.ratio(score)).map_err(write_err)?;
    if show {
        write!(out, "{}", forest.render()).map_err(write_err)?;
    }
    Ok(())
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Sra {
            instance,
            emit_allocation,
        } => {
            let graph = read_instance(&instance).map_err(input(&instance))?;
            let res = sra_decide(&graph);
            writeln!(out, "flow {}", res.flow_value).map_err(write_err)?;
            writeln!(out, "demand {}", res.total_demand).map_err(write_err)?;
            writeln!(out, "satisfiable {}", res.satisfiable).map_err(write_err)?;
            writeln!(out, "ratio {:?}", res.ratio).map_err(write_err)?;
            if let Some(path) = emit_allocation {
                let text = format!("{}ratio {:?}\n", res.allocation.render(), res.ratio);
                std::fs::write(&path, text).map_err(|e| input(&path)(Error::io(&path, e)))?;
            }
        }
        Command::DcdaExact {
            instance,
            source,
            k,
            method,
            budget,
            forest,
        } => {
            let inst = load_instance(&instance, source, k)?;
            let (f, optimal) = match method {
                Method::Bb => {
                    let budget = budget
                        .map(Duration::try_from_secs_f64)
                        .transpose()
                        .map_err(|e| usage(Error::InvalidParameter(format!("budget: {e}"))))?;
                    let res = branch_and_bound(&inst, budget);
                    (res.forest, res.proven_optimal)
                }
                Method::Benders => (solve_p1_benders(&inst).map_err(usage)?.forest, true),
                Method::Brute => (brute_force(&inst).map_err(usage)?.0, true),
            };
            summary(out, &inst, &f, optimal, forest)?;
        }
        Command::DcdaHeur {
            instance,
            source,
            k,
            algo,
            seed,
            pop,
            gens,
            forest,
        } => {
            let inst = load_instance(&instance, source, k)?;
            let f = match algo {
                Algo::Greedy => heuristics::greedy(&inst, seed),
                Algo::Random => heuristics::random_variant(&inst, seed),
                Algo::Prefixed => heuristics::prefixed_variant(&inst, seed),
                Algo::Ga => {
                    if pop < 2 {
                        return Err(usage(Error::InvalidParameter("--pop must be at least 2".into())));
                    }
                    let cfg = GaConfig {
                        population: pop,
                        generations: gens,
                        ..GaConfig::default()
                    };
                    heuristics::genetic(&inst, &cfg, seed)
                }
            };
            summary(out, &inst, &f, false, forest)?;
        }
        Command::ReduceSat { cnf, out: target } => {
            let text = std::fs::read_to_string(&cnf).map_err(|e| input(&cnf)(Error::io(&cnf, e)))?;
            let formula = Cnf::parse_dimacs(&text).map_err(input(&cnf))?;
            let red = sat_to_dcda(&formula).map_err(input(&cnf))?;
            let body = render_instance(red.instance.graph());
            match target {
                Some(path) => {
                    std::fs::write(&path, body).map_err(|e| input(&path)(Error::io(&path, e)))?;
                    writeln!(out, "gamma {}", red.gamma).map_err(write_err)?;
                }
                None => {
                    writeln!(out, "# gamma {}", red.gamma).map_err(write_err)?;
                    write!(out, "{body}").map_err(write_err)?;
                }
            }
        }
        Command::GenOverlay {
            n,
            kappa,
            seed,
            matrix,
            matrix_size,
            cap_lo,
            cap_hi,
            cap_mode,
            demand,
            out: target,
        } => {
            let matrix = match matrix {
                Some(path) => read_latency_matrix(&path).map_err(input(&path))?,
                None => LatencyMatrix::synthetic(matrix_size, seed).map_err(usage)?,
            };
            let sample = sample_nodes(matrix.size(), n, seed).map_err(usage)?;
            let mut graph = build_knn_overlay(&matrix, &sample, kappa).map_err(usage)?;
            let mode = match cap_mode {
                _ if cap_lo == cap_hi => CapacityMode::Constant(cap_lo),
                CapMode::Uniform => CapacityMode::Uniform { lo: cap_lo, hi: cap_hi },
                CapMode::Balanced => CapacityMode::Balanced { lo: cap_lo, hi: cap_hi },
            };
            graph.assign_capacities(mode, seed).map_err(usage)?;
            graph.assign_demands(demand);
            let body = render_instance(&graph);
            match target {
                Some(path) => std::fs::write(&path, body).map_err(|e| input(&path)(Error::io(&path, e)))?,
                None => write!(out, "{body}").map_err(write_err)?,
            }
        }
        Command::Bench {
            config,
            out: dir,
            matrix,
            jobs,
        } => {
            let cfg = ExperimentConfig::read(&config).map_err(|e| match e {
                Error::InvalidParameter(_) => usage(e),
                _ => input(&config)(e),
            })?;
            let matrix = match matrix {
                Some(path) => read_latency_matrix(&path).map_err(input(&path))?,
                None => LatencyMatrix::synthetic(cfg.matrix_size, cfg.seed).map_err(usage)?,
            };
            let report = run_battery(&cfg, &matrix, jobs).map_err(usage)?;
            emit_csv(&report, &dir).map_err(input(&dir))?;
            writeln!(out, "rows {}", report.rows.len()).map_err(write_err)?;
        }
    }
    Ok(())
}
