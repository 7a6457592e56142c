use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kgcp::benchmarks::Problem;
use kgcp::harness::{
    aggregate_from_trace_csv, emit_results, parse_policy, run_experiment, sweep_configs, write_aggregate_csv,
    ExperimentResult, ExternalMode, ExternalSpec, FailureKind, HyperMethod, OutputFormat, ProblemSpec, RunConfig,
};
use kgcp::{Domain, Error, Result};

#[derive(Parser)]
#[command(name = "kgcp", version, about = "Bayesian optimization experiments with Kriging surrogates")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run replications of one policy/hyperparameter setup.
    Run {
        #[command(flatten)]
        common: Common,
        /// kgcp, ei, ucb or soft-kgcp.
        #[arg(long, default_value = "kgcp")]
        policy: String,
        /// mle or ss (slice sampling).
        #[arg(long, default_value = "mle")]
        hyper: String,
    },
    /// Run all six policy/hyperparameter setups into subdirectories of --out.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Recompute the aggregate of an existing trace.csv.
    Report {
        #[arg(long)]
        trace: PathBuf,
        /// failures.csv to exclude failed runs (defaults to the sibling file if present).
        #[arg(long)]
        failures: Option<PathBuf>,
        /// Where to write the aggregate CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve a built-in problem over the external objective protocol:
    /// one decision per stdin line, one value per stdout line.
    Eval {
        #[arg(long)]
        problem: String,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    problem: String,
    /// Total number of evaluations (defaults to the problem's budget).
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long, default_value_t = 10)]
    init: usize,
    #[arg(long, default_value_t = 1)]
    replications: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte-Carlo candidates per acquisition (default 1000 per dimension).
    #[arg(long)]
    mc_candidates: Option<usize>,
    #[arg(long, default_value_t = 10)]
    local_refine: usize,
    #[arg(long, default_value_t = 200)]
    local_budget: usize,
    /// Retained samples per slice-sampling fit.
    #[arg(long, default_value_t = 100)]
    slice_samples: usize,
    #[arg(long, default_value_t = 0.1)]
    ucb_delta: f64,
    #[arg(long, default_value_t = 1e3)]
    soft_k: f64,
    /// csv or json.
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Evaluate the objective with this shell command instead.
    #[arg(long)]
    external_cmd: Option<String>,
    /// Keep one external process alive for all evaluations.
    #[arg(long)]
    persistent: bool,
    #[arg(long, default_value_t = 30.0)]
    timeout_s: f64,
    /// Domain as `l1:u1,l2:u2,...` (required for non-built-in problems).
    #[arg(long)]
    bounds: Option<String>,
    /// Known optimum (maximization orientation) for the opportunity cost.
    #[arg(long, allow_hyphen_values = true)]
    optimum: Option<f64>,
}

fn parse_bounds(s: &str) -> Result<Domain> {
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for part in s.split(',') {
        let (l, u) = part
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("bounds entry {part:?} is not l:u")))?;
        let parse = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad bound {t:?}")));
        lower.push(parse(l)?);
        upper.push(parse(u)?);
    }
    Domain::new(lower, upper).map_err(|e| Error::Config(e.to_string()))
}

impl Common {
    fn config(&self, policy: &str, hyper: &str) -> Result<RunConfig> {
        let problem = ProblemSpec {
            name: self.problem.clone(),
            external: self.external_cmd.as_ref().map(|cmd| ExternalSpec {
                command: cmd.clone(),
                mode: if self.persistent {
                    ExternalMode::Persistent
                } else {
                    ExternalMode::OneShot
                },
                timeout_s: self.timeout_s,
            }),
            bounds: self.bounds.as_deref().map(parse_bounds).transpose()?,
            optimum: self.optimum,
        };
        let resolved = kgcp::harness::ResolvedProblem::new(&problem)?;
        let mut hyper: HyperMethod = hyper.parse()?;
        if let HyperMethod::SliceSampling { h } = &mut hyper {
            *h = self.slice_samples;
        }
        let mut acquisition = kgcp::acquisition::AcquisitionConfig::for_dim(resolved.dim());
        if let Some(m) = self.mc_candidates {
            acquisition.mc_candidates = m;
        }
        acquisition.local_refine_count = self.local_refine;
        acquisition.local_budget = self.local_budget;
        let config = RunConfig {
            problem,
            policy: parse_policy(policy)?,
            hyper,
            init_size: self.init,
            budget: self
                .budget
                .or(resolved.default_budget)
                .ok_or_else(|| Error::Config("--budget is required for external problems".into()))?,
            replications: self.replications,
            seed: self.seed,
            acquisition,
            mle: Default::default(),
            slice: Default::default(),
            ucb_delta: self.ucb_delta,
            soft_k: self.soft_k,
            design_candidates: kgcp::design::DEFAULT_CANDIDATES,
        };
        config.validate()?;
        Ok(config)
    }

    fn format(&self) -> Result<OutputFormat> {
        self.format.parse()
    }
}

fn summarize(label: &str, result: &ExperimentResult) {
    match result.aggregate.final_row() {
        Some(row) => eprintln!(
            "{label}: N = {} mean OC {:.6} [{:.6}, {:.6}] over {} runs ({} failed)",
            row.iteration, row.mean_oc, row.ci_low, row.ci_high, row.n_runs, row.n_failed
        ),
        None => eprintln!("{label}: no successful runs ({} failed)", result.n_failed()),
    }
}

fn failure_code(result: &ExperimentResult) -> Option<u8> {
    result.first_failure().map(|f| match f.kind {
        FailureKind::Evaluation => 3,
        FailureKind::Model => 4,
        FailureKind::Other => 1,
    })
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Cmd::Run { common, policy, hyper } => {
            let config = common.config(&policy, &hyper)?;
            let result = run_experiment(&config)?;
            emit_results(&result, common.format()?, &common.out)?;
            summarize(&config.label(), &result);
            Ok(failure_code(&result).unwrap_or(0))
        }
        Cmd::Sweep { common } => {
            let base = common.config("kgcp", "mle")?;
            let mut code = 0;
            for config in sweep_configs(&base, common.slice_samples) {
                let result = run_experiment(&config)?;
                emit_results(&result, common.format()?, &common.out.join(config.label()))?;
                summarize(&config.label(), &result);
                code = code.max(failure_code(&result).unwrap_or(0));
            }
            Ok(code)
        }
        Cmd::Report { trace, failures, out } => {
            let failures = failures.or_else(|| {
                let sibling = trace.with_file_name("failures.csv");
                sibling.exists().then_some(sibling)
            });
            let aggregate = aggregate_from_trace_csv(&trace, failures.as_deref())?;
            match out {
                Some(p) => write_aggregate_csv(&p, &aggregate.rows)?,
                None => {
                    let mut w = csv::Writer::from_writer(io::stdout());
                    for row in &aggregate.rows {
                        w.serialize(row)?;
                    }
                    w.flush()?;
                }
            }
            Ok(0)
        }
        Cmd::Eval { problem } => {
            let p = Problem::by_name(&problem).ok_or_else(|| Error::Config(format!("unknown problem {problem:?}")))?;
            let stdout = io::stdout();
            let mut out = stdout.lock();
            for line in io::stdin().lock().lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let x: Vec<f64> = line
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| Error::EvaluationFailed(format!("bad input {t:?}"))))
                    .collect::<Result<_>>()?;
                if x.len() != p.dim() {
                    return Err(Error::EvaluationFailed(format!("expected {} values, got {}", p.dim(), x.len())));
                }
                writeln!(out, "{:?}", p.evaluate(&x))?;
                out.flush()?;
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match &e {
                Error::Config(_) | Error::InvalidArgument(_) => 2,
                Error::EvaluationFailed(_) => 3,
                e if e.is_model_failure() => 4,
                _ => 1,
            })
        }
    }
}
