//! Sequential sampling experiments: one run is an initial maximin design
//! followed by `budget - init_size` policy-driven acquisitions, with the
//! opportunity cost measured at the model's argmax after every acquisition.

mod external;
mod output;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use external::{ExternalMode, ExternalObjective, ExternalSpec};
pub use output::{
    aggregate_from_trace_csv, emit_results, read_aggregate_csv, read_failures_csv, read_trace_csv, write_aggregate_csv,
    write_trace_csv, OutputFormat, TraceRow,
};

use crate::acquisition::{model_argmax, propose, AcquisitionConfig};
use crate::benchmarks::{opportunity_cost_from_value, Problem};
use crate::design::{maximin_lhs_with, DesignSpec, DEFAULT_CANDIDATES};
use crate::hyperfit::{default_log10_bounds, mle_fit, slice_sample, MleOptions, ModelEnsemble, SliceOptions};
use crate::kriging::{BasisSet, Dataset};
use crate::policies::{ucb_beta, PolicyContext, PolicySpec};
use crate::{Domain, Error, Result};

/// z-value of the two-sided 95% normal interval.
pub const Z95: f64 = 1.96;

/// How `theta` is chosen each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperMethod {
    Mle,
    /// MLE followed by `h` slice-sampling draws started at the MLE.
    SliceSampling { h: usize },
}

impl fmt::Display for HyperMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperMethod::Mle => f.write_str("MLE"),
            HyperMethod::SliceSampling { .. } => f.write_str("SS"),
        }
    }
}

/// Parse a policy name (`kgcp`, `ei`, `ucb`, `soft-kgcp`).
pub fn parse_policy(s: &str) -> Result<PolicySpec> {
    match s.to_ascii_lowercase().replace('_', "-").as_str() {
        "kgcp" => Ok(PolicySpec::Kgcp),
        "ei" => Ok(PolicySpec::ExpectedImprovement),
        "ucb" => Ok(PolicySpec::Ucb),
        "soft-kgcp" => Ok(PolicySpec::SoftKgcp),
        other => Err(Error::Config(format!("unknown policy {other:?}"))),
    }
}

pub fn policy_label(policy: PolicySpec) -> &'static str {
    match policy {
        PolicySpec::Kgcp => "KGCP",
        PolicySpec::ExpectedImprovement => "EI",
        PolicySpec::Ucb => "UCB",
        PolicySpec::SoftKgcp => "SoftKGCP",
    }
}

impl FromStr for HyperMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mle" => Ok(HyperMethod::Mle),
            "ss" | "slice" => Ok(HyperMethod::SliceSampling { h: 100 }),
            other => Err(Error::Config(format!("unknown hyperparameter method {other:?}"))),
        }
    }
}

/// Objective to optimize: a built-in problem, an external command, or both
/// (built-in metadata with external evaluations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    pub external: Option<ExternalSpec>,
    /// Overrides or supplies the domain.
    pub bounds: Option<Domain>,
    /// Overrides or supplies the known optimum used for the opportunity cost.
    pub optimum: Option<f64>,
}

impl ProblemSpec {
    pub fn builtin(name: &str) -> Self {
        Self {
            name: name.to_string(),
            external: None,
            bounds: None,
            optimum: None,
        }
    }
}

/// Problem metadata after resolving names and overrides.
#[derive(Debug, Clone)]
pub struct ResolvedProblem {
    pub name: String,
    pub domain: Domain,
    pub optimum: f64,
    pub default_budget: Option<usize>,
    builtin: Option<Problem>,
    external: Option<ExternalSpec>,
}

impl ResolvedProblem {
    pub fn new(spec: &ProblemSpec) -> Result<Self> {
        let builtin = Problem::by_name(&spec.name);
        if builtin.is_none() && spec.external.is_none() {
            return Err(Error::Config(format!(
                "unknown problem {:?} (built-in: {})",
                spec.name,
                Problem::NAMES.join(", ")
            )));
        }
        let domain = spec
            .bounds
            .clone()
            .or_else(|| builtin.as_ref().map(|p| p.domain.clone()))
            .ok_or_else(|| Error::Config("external problems need explicit bounds".into()))?;
        let optimum = spec
            .optimum
            .or_else(|| builtin.as_ref().map(|p| p.true_optimum))
            .ok_or_else(|| Error::Config("external problems need a known optimum for the opportunity cost".into()))?;
        if let Some(p) = &builtin {
            if p.dim() != domain.dim() {
                return Err(Error::Config(format!("{} is {}-dimensional", p.name, p.dim())));
            }
        }
        Ok(Self {
            name: spec.name.clone(),
            domain,
            optimum,
            default_budget: builtin.as_ref().map(|p| p.budget),
            external: spec.external.clone(),
            builtin,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Fresh evaluator; external processes are never shared between runs.
    pub fn objective(&self) -> Result<Box<dyn Objective>> {
        match (&self.external, &self.builtin) {
            (Some(ext), _) => Ok(Box::new(ExternalObjective::new(ext.clone())?)),
            (None, Some(p)) => Ok(Box::new(p.clone())),
            (None, None) => unreachable!("checked in ResolvedProblem::new"),
        }
    }
}

/// Something that can be evaluated at a decision (maximization orientation).
pub trait Objective: Send {
    fn evaluate(&mut self, x: &[f64]) -> Result<f64>;
}

impl Objective for Problem {
    fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        Ok(Problem::evaluate(self, x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub policy: PolicySpec,
    pub hyper: HyperMethod,
    pub init_size: usize,
    pub budget: usize,
    pub replications: usize,
    pub seed: u64,
    pub acquisition: AcquisitionConfig,
    pub mle: MleOptions,
    pub slice: SliceOptions,
    /// δ of the GP-UCB exploration schedule.
    pub ucb_delta: f64,
    /// Smoothing constant when the policy is soft KGCP.
    pub soft_k: f64,
    /// Random Latin hypercubes compared for the initial design.
    pub design_candidates: usize,
}

impl RunConfig {
    /// Defaults for a built-in problem: 10 initial points, the problem's budget,
    /// one replication.
    pub fn for_problem(name: &str, policy: PolicySpec, hyper: HyperMethod) -> Result<Self> {
        let resolved = ResolvedProblem::new(&ProblemSpec::builtin(name))?;
        Ok(Self {
            problem: ProblemSpec::builtin(name),
            policy,
            hyper,
            init_size: 10,
            budget: resolved.default_budget.unwrap_or(20),
            replications: 1,
            seed: 0,
            acquisition: AcquisitionConfig::for_dim(resolved.dim()),
            mle: MleOptions::default(),
            slice: SliceOptions::default(),
            ucb_delta: 0.1,
            soft_k: 1e3,
            design_candidates: DEFAULT_CANDIDATES,
        })
    }

    pub fn validate(&self) -> Result<ResolvedProblem> {
        let resolved = ResolvedProblem::new(&self.problem)?;
        if self.init_size == 0 || self.budget <= self.init_size {
            return Err(Error::Config(format!(
                "budget ({}) must exceed the initial design size ({})",
                self.budget, self.init_size
            )));
        }
        if self.replications == 0 {
            return Err(Error::Config("at least one replication is required".into()));
        }
        if let HyperMethod::SliceSampling { h: 0 } = self.hyper {
            return Err(Error::Config("slice sampling needs at least one sample".into()));
        }
        if !(self.ucb_delta > 0.0 && self.ucb_delta < 1.0) {
            return Err(Error::Config(format!("ucb delta must lie in (0, 1), got {}", self.ucb_delta)));
        }
        if !(self.soft_k > 0.0) {
            return Err(Error::Config("soft-KGCP constant must be positive".into()));
        }
        self.acquisition.validate()?;
        Ok(resolved)
    }

    pub fn label(&self) -> String {
        format!("{}-{}", policy_label(self.policy), self.hyper)
    }
}

/// Fitted length scales behind a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaSummary {
    Point { theta: Vec<f64> },
    /// Per-dimension mean and standard deviation of `log10(theta)` over the chain.
    Chain { mean_log10: Vec<f64>, std_log10: Vec<f64> },
}

impl ThetaSummary {
    fn of(ensemble: &ModelEnsemble) -> Self {
        if ensemble.len() == 1 {
            return ThetaSummary::Point {
                theta: ensemble.models()[0].theta().values().to_vec(),
            };
        }
        let logs: Vec<Vec<f64>> = ensemble.models().iter().map(|m| m.theta().log10()).collect();
        let h = logs.len() as f64;
        let d = logs[0].len();
        let mean: Vec<f64> = (0..d).map(|k| logs.iter().map(|l| l[k]).sum::<f64>() / h).collect();
        let std = (0..d)
            .map(|k| (logs.iter().map(|l| (l[k] - mean[k]).powi(2)).sum::<f64>() / h).sqrt())
            .collect();
        ThetaSummary::Chain {
            mean_log10: mean,
            std_log10: std,
        }
    }
}

/// One acquisition step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: usize,
    /// Number of observations once this decision has been evaluated.
    pub iteration: usize,
    pub x: Vec<f64>,
    pub y: f64,
    /// Opportunity cost at the argmax of the model refitted with this observation.
    pub oc: f64,
    pub theta: ThetaSummary,
    pub wallclock_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Evaluation,
    Model,
    Other,
}

impl FailureKind {
    fn of(e: &Error) -> Self {
        match e {
            Error::EvaluationFailed(_) => FailureKind::Evaluation,
            e if e.is_model_failure() => FailureKind::Model,
            _ => FailureKind::Other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub kind: FailureKind,
    pub message: String,
}

/// Full history of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub run_id: usize,
    pub seed: u64,
    pub initial_x: Vec<Vec<f64>>,
    pub initial_y: Vec<f64>,
    pub records: Vec<RunRecord>,
    pub failure: Option<RunFailure>,
}

impl RunTrace {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    /// Opportunity cost once `observations` points have been evaluated.
    pub fn oc_at(&self, observations: usize) -> Option<f64> {
        self.records.iter().find(|r| r.iteration == observations).map(|r| r.oc)
    }

    pub fn final_oc(&self) -> Option<f64> {
        self.records.last().map(|r| r.oc)
    }
}

fn fit_ensemble(data: Arc<Dataset>, config: &RunConfig, rng: &mut ChaCha8Rng) -> Result<ModelEnsemble> {
    let basis = BasisSet::ordinary();
    let bounds = default_log10_bounds(data.dim());
    let mle = mle_fit(data.clone(), &basis, &bounds, &config.mle, rng)?;
    match config.hyper {
        HyperMethod::Mle => Ok(ModelEnsemble::single(mle)),
        HyperMethod::SliceSampling { h } => {
            let seed = rng.gen();
            slice_sample(data, &basis, mle.theta(), h, &bounds, &config.slice, seed)
        }
    }
}

/// Run one replication; failures are reported inside the trace.
pub fn run_single(config: &RunConfig, run_id: usize, seed: u64) -> Result<RunTrace> {
    let problem = config.validate()?;
    let mut trace = RunTrace {
        run_id,
        seed,
        initial_x: Vec::new(),
        initial_y: Vec::new(),
        records: Vec::new(),
        failure: None,
    };
    if let Err(e) = run_loop(config, &problem, &mut trace) {
        trace.failure = Some(RunFailure {
            kind: FailureKind::of(&e),
            message: e.to_string(),
        });
    }
    Ok(trace)
}

fn run_loop(config: &RunConfig, problem: &ResolvedProblem, trace: &mut RunTrace) -> Result<()> {
    let domain = &problem.domain;
    let d = domain.dim();
    let mut objective = problem.objective()?;
    let mut hyper_rng = ChaCha8Rng::seed_from_u64(trace.seed);
    hyper_rng.set_stream(1);
    let mut acq_rng = ChaCha8Rng::seed_from_u64(trace.seed ^ config.acquisition.seed);
    acq_rng.set_stream(2);

    let started = Instant::now();
    let design = maximin_lhs_with(
        &DesignSpec {
            n: config.init_size,
            d,
            seed: trace.seed,
        },
        domain,
        config.design_candidates,
    )?;
    for x in &design {
        let y = objective.evaluate(x)?;
        trace.initial_x.push(x.clone());
        trace.initial_y.push(y);
    }
    let mut data = Arc::new(Dataset::new(design, trace.initial_y.clone(), domain.clone())?);
    let mut ensemble = fit_ensemble(data.clone(), config, &mut hyper_rng)?;
    let mut clock = started.elapsed();

    for n in config.init_size..config.budget {
        let t0 = Instant::now();
        let ctx = PolicyContext {
            y_max: data.y_max(),
            iteration: n,
            ucb_beta: ucb_beta(n, d, config.ucb_delta),
            soft_k: config.soft_k,
        };
        let proposal = propose(&ensemble, config.policy, &ctx, domain, &config.acquisition, &mut acq_rng)?;
        let y = objective.evaluate(&proposal.x)?;
        data = Arc::new(data.with_observation(&proposal.x, y)?);
        ensemble = fit_ensemble(data.clone(), config, &mut hyper_rng)?;
        let x_hat = model_argmax(&ensemble, domain, &config.acquisition, &mut acq_rng)?;
        let oc = opportunity_cost_from_value(problem.optimum, objective.evaluate(&x_hat)?)?;
        let elapsed = clock + t0.elapsed();
        clock = Default::default();
        trace.records.push(RunRecord {
            run_id: trace.run_id,
            iteration: n + 1,
            x: proposal.x,
            y,
            oc,
            theta: ThetaSummary::of(&ensemble),
            wallclock_ms: elapsed.as_secs_f64() * 1e3,
        });
    }
    Ok(())
}

/// Mean opportunity cost and normal-approximation 95% interval at one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub iteration: usize,
    pub mean_oc: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_runs: usize,
    pub n_failed: usize,
}

impl AggregateRow {
    /// `mean ± 1.96 · sd / √R` with the sample standard deviation.
    pub fn from_values(iteration: usize, values: &[f64], n_failed: usize) -> Self {
        let r = values.len();
        let mean = if r == 0 { f64::NAN } else { values.iter().sum::<f64>() / r as f64 };
        let half = if r < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
            Z95 * var.sqrt() / (r as f64).sqrt()
        };
        Self {
            iteration,
            mean_oc: mean,
            ci_low: mean - half,
            ci_high: mean + half,
            n_runs: r,
            n_failed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub rows: Vec<AggregateRow>,
}

impl Aggregate {
    /// Per-iteration statistics over successful traces; failed ones are only counted.
    pub fn from_traces(traces: &[RunTrace]) -> Self {
        let ok: Vec<&RunTrace> = traces.iter().filter(|t| !t.failed()).collect();
        let failed = traces.len() - ok.len();
        let mut iterations: Vec<usize> = ok.iter().flat_map(|t| t.records.iter().map(|r| r.iteration)).collect();
        iterations.sort_unstable();
        iterations.dedup();
        let rows = iterations
            .into_iter()
            .map(|it| {
                let values: Vec<f64> = ok.iter().filter_map(|t| t.oc_at(it)).collect();
                AggregateRow::from_values(it, &values, failed)
            })
            .collect();
        Self { rows }
    }

    /// Summary after the final observation.
    pub fn final_row(&self) -> Option<&AggregateRow> {
        self.rows.last()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: RunConfig,
    pub traces: Vec<RunTrace>,
    pub aggregate: Aggregate,
}

impl ExperimentResult {
    pub fn n_failed(&self) -> usize {
        self.traces.iter().filter(|t| t.failed()).count()
    }

    /// First failure, used to choose a process exit code.
    pub fn first_failure(&self) -> Option<&RunFailure> {
        self.traces.iter().find_map(|t| t.failure.as_ref())
    }
}

/// Run all replications (seeds `seed + r`) and aggregate them.
pub fn run_experiment(config: &RunConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let traces = (0..config.replications)
        .into_par_iter()
        .map(|r| run_single(config, r, config.seed.wrapping_add(r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = Aggregate::from_traces(&traces);
    Ok(ExperimentResult {
        config: config.clone(),
        traces,
        aggregate,
    })
}

/// The six policy/hyperparameter combinations compared by `sweep`.
pub fn sweep_configs(base: &RunConfig, slice_samples: usize) -> Vec<RunConfig> {
    let mut out = Vec::new();
    for policy in [PolicySpec::Kgcp, PolicySpec::ExpectedImprovement, PolicySpec::Ucb] {
        for hyper in [HyperMethod::Mle, HyperMethod::SliceSampling { h: slice_samples }] {
            out.push(RunConfig {
                policy,
                hyper,
                ..base.clone()
            });
        }
    }
    out
}
