use std::fs;
use std::process::Command;

use kgcp::harness::{
    aggregate_from_trace_csv, emit_results, read_aggregate_csv, run_experiment, run_single, Aggregate, ExternalMode,
    ExternalObjective, ExternalSpec, FailureKind, HyperMethod, Objective, OutputFormat, ProblemSpec, RunConfig,
    RunRecord, RunTrace, ThetaSummary,
};
use kgcp::policies::PolicySpec;
use kgcp::Error;

const BIN: &str = env!("CARGO_BIN_EXE_kgcp");

fn branin(policy: PolicySpec) -> RunConfig {
    RunConfig::for_problem("branin", policy, HyperMethod::Mle).unwrap()
}

fn strip_wallclock(t: &RunTrace) -> Vec<(usize, Vec<f64>, f64, f64)> {
    t.records.iter().map(|r| (r.iteration, r.x.clone(), r.y, r.oc)).collect()
}

#[test]
fn trace_shape_and_determinism() {
    let cfg = branin(PolicySpec::Kgcp);
    let a = run_single(&cfg, 0, 11).unwrap();
    assert!(a.failure.is_none());
    assert_eq!(a.initial_x.len(), 10);
    let its: Vec<usize> = a.records.iter().map(|r| r.iteration).collect();
    assert_eq!(its, (11..=20).collect::<Vec<_>>());
    assert!(a.records.iter().all(|r| r.oc >= 0.0));
    assert!(matches!(a.records[0].theta, ThetaSummary::Point { .. }));
    assert_eq!(strip_wallclock(&a), strip_wallclock(&run_single(&cfg, 0, 11).unwrap()));

    let mut one = cfg.clone();
    one.budget = 11;
    assert_eq!(run_single(&one, 0, 11).unwrap().records.len(), 1);
}

#[test]
fn oc_improves_on_branin() {
    let cfg = branin(PolicySpec::Kgcp);
    let improved = (0..10)
        .filter(|&s| {
            let t = run_single(&cfg, s, s as u64).unwrap();
            t.records.last().unwrap().oc <= t.records[0].oc
        })
        .count();
    assert!(improved >= 8, "{improved}/10");
}

#[test]
fn slice_sampling_runs_through_the_same_path() {
    let mut cfg = RunConfig::for_problem("branin", PolicySpec::ExpectedImprovement, HyperMethod::SliceSampling { h: 5 }).unwrap();
    cfg.budget = 12;
    let t = run_single(&cfg, 0, 1).unwrap();
    assert!(t.failure.is_none());
    assert!(matches!(t.records[0].theta, ThetaSummary::Chain { .. }));
}

#[test]
fn external_stubs() {
    let mut one = ExternalObjective::new(ExternalSpec::one_shot("cat > /dev/null; echo 1.0")).unwrap();
    assert_eq!(one.evaluate(&[0.5, 0.5]).unwrap(), 1.0);
    let mut junk = ExternalObjective::new(ExternalSpec::one_shot("cat > /dev/null; echo banana")).unwrap();
    assert!(matches!(junk.evaluate(&[0.5]), Err(Error::EvaluationFailed(_))));

    let mut cfg = branin(PolicySpec::Kgcp);
    cfg.problem.external = Some(ExternalSpec::one_shot("echo banana"));
    let t = run_single(&cfg, 0, 0).unwrap();
    assert_eq!(t.failure.as_ref().unwrap().kind, FailureKind::Evaluation);
    assert!(t.records.is_empty());
}

#[test]
fn external_branin_reproduces_builtin() {
    let cfg = branin(PolicySpec::Kgcp);
    let builtin = run_single(&cfg, 0, 3).unwrap();
    for mode in [ExternalMode::OneShot, ExternalMode::Persistent] {
        let mut ext = cfg.clone();
        ext.problem.external = Some(ExternalSpec {
            command: format!("{BIN} eval --problem branin"),
            mode,
            timeout_s: 30.0,
        });
        let t = run_single(&ext, 0, 3).unwrap();
        assert!(t.failure.is_none(), "{:?}", t.failure);
        assert_eq!(t.records.len(), builtin.records.len());
        for (a, b) in t.records.iter().zip(&builtin.records) {
            assert!((a.oc - b.oc).abs() <= 1e-9);
        }
    }
}

#[test]
fn custom_external_problem_needs_metadata() {
    let spec = ProblemSpec {
        name: "my-sim".into(),
        external: Some(ExternalSpec::one_shot("echo 0")),
        bounds: None,
        optimum: None,
    };
    assert!(matches!(kgcp::harness::ResolvedProblem::new(&spec), Err(Error::Config(_))));
}

fn fixture_trace(run_id: usize, ocs: &[f64], failed: bool) -> RunTrace {
    RunTrace {
        run_id,
        seed: run_id as u64,
        initial_x: vec![],
        initial_y: vec![],
        records: ocs
            .iter()
            .enumerate()
            .map(|(i, &oc)| RunRecord {
                run_id,
                iteration: 11 + i,
                x: vec![0.0, 0.0],
                y: 0.0,
                oc,
                theta: ThetaSummary::Point { theta: vec![1.0, 1.0] },
                wallclock_ms: 1.0,
            })
            .collect(),
        failure: failed.then(|| kgcp::harness::RunFailure {
            kind: FailureKind::Model,
            message: "boom".into(),
        }),
    }
}

#[test]
fn aggregate_of_fixture_traces() {
    let agg = Aggregate::from_traces(&[
        fixture_trace(0, &[1.0, 0.5], false),
        fixture_trace(1, &[3.0, 0.5], false),
        fixture_trace(2, &[100.0], true),
    ]);
    let row = &agg.rows[0];
    assert_eq!((row.iteration, row.n_runs, row.n_failed), (11, 2, 1));
    assert_eq!(row.mean_oc, 2.0);
    assert!((row.ci_high - row.mean_oc - 1.96).abs() < 1e-12);
    assert_eq!(agg.final_row().unwrap().ci_low, 0.5);
    assert!(agg.rows.iter().all(|r| r.ci_low <= r.mean_oc && r.mean_oc <= r.ci_high));
}

#[test]
fn emit_and_reparse() {
    let mut cfg = branin(PolicySpec::Ucb);
    cfg.budget = 13;
    cfg.replications = 2;
    let result = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_results(&result, OutputFormat::Csv, dir.path()).unwrap();
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("run_id,iteration,x_1,x_2,y,oc,wallclock_ms\n"));
    let agg = fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
    assert!(agg.starts_with("iteration,mean_oc,ci_low,ci_high,n_runs,n_failed\n"));
    assert_eq!(read_aggregate_csv(&dir.path().join("aggregate.csv")).unwrap(), result.aggregate.rows);
    assert_eq!(aggregate_from_trace_csv(&dir.path().join("trace.csv"), None).unwrap(), result.aggregate);
    assert!(!dir.path().join("failures.csv").exists());

    emit_results(&result, OutputFormat::Json, dir.path()).unwrap();
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("results.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["acquisition"]["mc_candidates"], 2000);
    assert_eq!(json["config"]["mle"]["starts"], 20);
    assert_eq!(json["traces"].as_array().unwrap().len(), 2);
    let back: kgcp::harness::ExperimentResult = serde_json::from_value(json).unwrap();
    assert_eq!(back.aggregate, result.aggregate);
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn cli_exit_codes_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let base = ["run", "--problem", "branin", "--budget", "12", "--replications", "2", "--seed", "4"];

    let (code, _) = cli(&[&base[..], &["--out", &d("a")]].concat());
    assert_eq!(code, 0);
    let (code, _) = cli(&[&base[..], &["--out", &d("b")]].concat());
    assert_eq!(code, 0);
    let strip = |p: String| -> Vec<String> {
        fs::read_to_string(p)
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    assert_eq!(strip(d("a/trace.csv")), strip(d("b/trace.csv")));

    let (code, _) = cli(&["report", "--trace", &d("a/trace.csv"), "--out", &d("a/re.csv")]);
    assert_eq!(code, 0);
    assert_eq!(fs::read_to_string(d("a/re.csv")).unwrap(), fs::read_to_string(d("a/aggregate.csv")).unwrap());

    assert_eq!(cli(&["run", "--problem", "truss", "--out", &d("c")]).0, 2);
    assert_eq!(cli(&["run", "--problem", "branin", "--budget", "5", "--out", &d("c")]).0, 2);
    assert_eq!(cli(&["run", "--problem", "branin", "--policy", "pi", "--out", &d("c")]).0, 2);
    let (code, _) = cli(&["run", "--problem", "branin", "--external-cmd", "echo banana", "--out", &d("c")]);
    assert_eq!(code, 3);
    assert!(fs::read_to_string(d("c/failures.csv")).unwrap().contains("evaluation"));
}
