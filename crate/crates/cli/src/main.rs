//! `hamdeck`: construct, verify and count Hamiltonian decompositions from the
//! command line. Graphs are read in the edge-list format; results are JSON
//! (or a flat text rendering) on stdout.

mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hamdeck::counting::{self, CountError};
use hamdeck::decompose::{decompose_odd, decompose_pipeline, DecomposeError, FailureKind, PipelineRun};
use hamdeck::expansion::{is_robust_expander, CheckMode, ExpansionError, DEFAULT_TRIALS, EXACT_CAP};
use hamdeck::factor::{component_profile, sample_le2_factor_with, FactorError, SampleOptions};
use hamdeck::graph::Graph;
use hamdeck::partition::{derive_params, tri_partition, verify_partition, PartitionError, PipelineParams};
use hamdeck::walecki::{verify_decomposition, walecki_decomposition, Decomposition};

use output::Output;

#[derive(Parser, Debug)]
#[command(name = "hamdeck", version, about = "Hamiltonian decompositions of dense regular graphs")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// Seed for every random choice; echoed in the output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write per-stage statistics to stderr as JSON lines.
    #[arg(long, global = true)]
    trace: bool,
    /// Omit the `meta` object (version, timestamp, timings).
    #[arg(long, global = true)]
    no_meta: bool,
    /// Wall-clock budget in milliseconds for the decomposition commands.
    #[arg(long, global = true, env = "HAMDECK_BUDGET_MS")]
    budget_ms: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

/// Overrides of the pipeline parameters. Unset values default to
/// `c = r/(n-1)`, `ε = 0.05`, `γ = 0.01`, `τ = 0.2`.
#[derive(Args, Debug, Default)]
struct ParamArgs {
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Stop rotation steps after this many cycles.
    #[arg(long)]
    step_limit: Option<usize>,
    /// Search-node budget of the residual completer.
    #[arg(long)]
    completion_budget: Option<u64>,
    /// Random splits tried for the tri-partition.
    #[arg(long)]
    partition_retries: Option<usize>,
    /// Restarts allowed per extracted Hamilton cycle.
    #[arg(long)]
    restart_budget: Option<usize>,
    /// Smallest order run through the rotation pipeline.
    #[arg(long)]
    min_n: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Walecki decomposition of K_n, n odd.
    Walecki { n: usize },
    /// Decompose an even-regular graph into Hamilton cycles.
    Decompose {
        graph: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Decompose an odd-regular graph into Hamilton cycles and a perfect matching.
    DecomposeOdd {
        graph: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Bounds on the number of Hamiltonian decompositions, with exact counts on request.
    Count {
        graph: PathBuf,
        /// Also count Hamilton cycles and decompositions exactly.
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
    },
    /// Check a decomposition JSON file against a graph.
    Verify { graph: PathBuf, decomposition: PathBuf },
    /// Split a graph into core, reservoir and remainder.
    Partition {
        graph: PathBuf,
        /// Write g.edges, f.edges, r.edges and partition.json here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Sample a (<=2)-factor.
    SampleFactor {
        graph: PathBuf,
        /// Resample factors with more components than this (default ⌈√(n ln n)⌉).
        #[arg(long)]
        max_components: Option<usize>,
        #[arg(long, default_value_t = hamdeck::factor::DEFAULT_SAMPLE_ATTEMPTS)]
        attempts: usize,
    },
    /// Test robust (ν, τ)-expansion.
    CheckExpander {
        graph: PathBuf,
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        tau: f64,
        /// Sample sets instead of enumerating them (default above n = 24).
        #[arg(long)]
        sampled: bool,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
    },
    /// Evaluate the bound formulas for given n and r.
    Bounds {
        n: usize,
        r: usize,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
    },
}

/// A failed invocation and its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

const EXIT_INFEASIBLE: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_INPUT: u8 = 3;

impl Failure {
    fn new(code: u8, message: impl ToString) -> Self {
        Failure {
            code,
            message: message.to_string(),
        }
    }

    fn input(message: impl ToString) -> Self {
        Failure::new(EXIT_INPUT, message)
    }
}

impl From<DecomposeError> for Failure {
    fn from(e: DecomposeError) -> Self {
        let code = match &e {
            DecomposeError::Partition(PartitionError::Parameter(_)) => EXIT_INPUT,
            _ => match e.kind() {
                FailureKind::Budget => EXIT_BUDGET,
                FailureKind::Infeasible => EXIT_INFEASIBLE,
            },
        };
        Failure::new(code, e)
    }
}

impl From<PartitionError> for Failure {
    fn from(e: PartitionError) -> Self {
        let code = match e {
            PartitionError::Parameter(_) => EXIT_INPUT,
            PartitionError::RetriesExhausted { .. } => EXIT_BUDGET,
            _ => EXIT_INFEASIBLE,
        };
        Failure::new(code, e)
    }
}

impl From<CountError> for Failure {
    fn from(e: CountError) -> Self {
        let code = match e {
            CountError::TooLarge { .. } => EXIT_BUDGET,
            CountError::Parameter(_) => EXIT_INPUT,
            _ => EXIT_INFEASIBLE,
        };
        Failure::new(code, e)
    }
}

fn read_graph(path: &Path) -> Result<Graph, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Graph::parse_edge_list(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn build_params(g: &Graph, args: &ParamArgs, common: &Common) -> Result<PipelineParams, Failure> {
    let n = g.n();
    let r = g.regular_degree().unwrap_or_else(|| g.min_degree());
    let base = PipelineParams::for_graph(n, r, common.seed);
    let mut p = derive_params(
        args.c.unwrap_or(base.c),
        args.epsilon.unwrap_or(base.epsilon),
        args.gamma.unwrap_or(base.gamma),
        args.tau.unwrap_or(base.tau),
        common.seed,
    )
    .map_err(Failure::input)?;
    p.step_limit = args.step_limit;
    if let Some(b) = args.completion_budget {
        p.completion_budget = b;
    }
    if let Some(k) = args.partition_retries {
        p.partition_retries = k;
    }
    if let Some(k) = args.restart_budget {
        p.restart_budget = k;
    }
    if let Some(k) = args.min_n {
        p.min_n = k;
    }
    p.deadline = common.budget_ms.map(|ms| Instant::now() + Duration::from_millis(ms));
    Ok(p)
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("output types serialize")
}

/// Decomposition fields at the top level (so the output feeds `verify`),
/// the rest of the run under `run`, timings under `meta`.
fn run_output(out: &mut Output, run: &PipelineRun) -> Value {
    if out.trace {
        if let Some(p) = &run.partition {
            out.trace_line(json!({"event": "partition", "d0": p.d0, "sizes": p.sizes, "split_attempts": p.split_attempts}));
        }
        for (i, s) in run.step_stats.iter().enumerate() {
            let mut line = to_value(s);
            line["event"] = json!("step");
            line["step"] = json!(i);
            out.trace_line(line);
        }
        out.trace_line(json!({"event": "completion", "stats": run.completion}));
    }
    out.meta("timings", to_value(&run.timings));
    let mut rest = to_value(run);
    let obj = rest.as_object_mut().expect("run serializes to an object");
    obj.remove("decomposition");
    obj.remove("timings");
    let mut v = to_value(&run.decomposition);
    v["run"] = rest;
    v
}

fn run(cli: Cli, out: &mut Output) -> Result<Value, Failure> {
    let common = &cli.common;
    match cli.cmd {
        Cmd::Walecki { n } => {
            let d = walecki_decomposition(n).map_err(Failure::input)?;
            Ok(to_value(&d))
        }
        Cmd::Decompose { graph, params } => {
            let g = read_graph(&graph)?;
            let p = build_params(&g, &params, common)?;
            let run = decompose_pipeline(&g, &p)?;
            out.seed(common.seed);
            Ok(run_output(out, &run))
        }
        Cmd::DecomposeOdd { graph, params } => {
            let g = read_graph(&graph)?;
            let p = build_params(&g, &params, common)?;
            let run = decompose_odd(&g, &p)?;
            out.seed(common.seed);
            Ok(run_output(out, &run))
        }
        Cmd::Count { graph, exact, epsilon } => {
            let g = read_graph(&graph)?;
            let report = counting::count_report(&g, epsilon, exact)?;
            Ok(to_value(&report))
        }
        Cmd::Verify { graph, decomposition } => {
            let g = read_graph(&graph)?;
            let text = fs::read_to_string(&decomposition)
                .map_err(|e| Failure::input(format!("{}: {e}", decomposition.display())))?;
            let d: Decomposition = serde_json::from_str(&text)
                .map_err(|e| Failure::input(format!("{}: {e}", decomposition.display())))?;
            let verdict = verify_decomposition(&g, &d);
            let v = to_value(&verdict);
            if !verdict.valid {
                out.print(&v);
                return Err(Failure::new(EXIT_INFEASIBLE, format!("invalid decomposition: {}", verdict.violation.map(|x| to_value(&x)).unwrap_or_default())));
            }
            Ok(v)
        }
        Cmd::Partition { graph, out_dir, params } => {
            let g = read_graph(&graph)?;
            let p = build_params(&g, &params, common)?;
            let tp = tri_partition(&g, &p)?;
            let report = verify_partition(&g, &tp, p.sample_trials, common.seed);
            let summary = json!({"partition": tp.meta, "verification": report, "all_pass": report.all_pass()});
            if let Some(dir) = out_dir {
                fs::create_dir_all(&dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
                let write = |name: &str, body: String| {
                    fs::write(dir.join(name), body).map_err(|e| Failure::input(format!("{}: {e}", dir.join(name).display())))
                };
                write("g.edges", tp.g.to_edge_list())?;
                write("f.edges", tp.f.to_edge_list())?;
                write("r.edges", tp.r.to_edge_list())?;
                write("partition.json", serde_json::to_string_pretty(&summary).expect("serializes") + "\n")?;
            }
            out.seed(common.seed);
            Ok(summary)
        }
        Cmd::SampleFactor { graph, max_components, attempts } => {
            let g = read_graph(&graph)?;
            let mut opts = SampleOptions::for_order(g.n());
            if max_components.is_some() {
                opts.component_cap = max_components;
            }
            opts.attempts = attempts;
            let f = sample_le2_factor_with(&g, common.seed, opts).map_err(|e| match e {
                FactorError::NoFactor => Failure::new(EXIT_INFEASIBLE, e),
                _ => Failure::input(e),
            })?;
            let mut v = to_value(&f);
            v["profile"] = to_value(&component_profile(&f));
            out.seed(common.seed);
            Ok(v)
        }
        Cmd::CheckExpander { graph, nu, tau, sampled, trials } => {
            let g = read_graph(&graph)?;
            let mode = if sampled || g.n() > EXACT_CAP {
                CheckMode::Sampled { trials, seed: common.seed }
            } else {
                CheckMode::Exact
            };
            let verdict = is_robust_expander(&g, nu, tau, mode).map_err(|e| match e {
                ExpansionError::ExactTooLarge { .. } => Failure::new(EXIT_BUDGET, e),
                _ => Failure::input(e),
            })?;
            if matches!(mode, CheckMode::Sampled { .. }) {
                out.seed(common.seed);
            }
            Ok(to_value(&verdict))
        }
        Cmd::Bounds { n, r, epsilon } => {
            if r == 0 || r >= n {
                return Err(Failure::input(format!("need 1 <= r < n, got n = {n}, r = {r}")));
            }
            if !(0.0..0.1).contains(&epsilon) {
                return Err(Failure::input(format!("need 0 <= epsilon < 1/10, got {epsilon}")));
            }
            let upper = counting::decomposition_log_upper(n, r).ok();
            Ok(json!({
                "n": n,
                "r": r,
                "epsilon": epsilon,
                "bregman_log": counting::bregman_log_bound(n, r),
                "log_upper": upper.map(|u| u.finite),
                "log_upper_asymptotic": upper.map(|u| u.asymptotic),
                "log_lower": counting::decomposition_log_lower(n, r, epsilon),
                "log_lower_limit": counting::decomposition_log_lower(n, r, 0.0),
            }))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    let mut out = Output::new(cli.common.format, cli.common.trace, !cli.common.no_meta);
    match run(cli, &mut out) {
        Ok(v) => {
            out.finish(v);
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
