//! Result files.
//!
//! CSV output is a directory with `trace.csv`, `aggregate.csv`,
//! `config.json` and (when runs failed) `failures.csv`. JSON output is a
//! single `results.json` holding the configuration, every trace and the
//! aggregate.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Aggregate, AggregateRow, ExperimentResult, FailureKind, RunFailure, RunTrace};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown output format {other:?}"))),
        }
    }
}

/// One line of `trace.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub run_id: usize,
    pub iteration: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub oc: f64,
    pub wallclock_ms: f64,
}

pub fn write_trace_csv(path: &Path, traces: &[RunTrace], dim: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["run_id".to_string(), "iteration".to_string()];
    header.extend((1..=dim).map(|k| format!("x_{k}")));
    header.extend(["y", "oc", "wallclock_ms"].map(String::from));
    w.write_record(&header)?;
    for t in traces {
        for r in &t.records {
            let mut rec = vec![r.run_id.to_string(), r.iteration.to_string()];
            rec.extend(r.x.iter().map(f64::to_string));
            rec.extend([r.y, r.oc, r.wallclock_ms].map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Config(format!("malformed field {} on record {line}", i + 1)))
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let dim = header.iter().filter(|h| h.starts_with("x_")).count();
    if header.len() != dim + 5 || header.get(0) != Some("run_id") {
        return Err(Error::Config(format!("{} is not a trace file", path.display())));
    }
    r.records()
        .enumerate()
        .map(|(line, rec)| {
            let rec = rec?;
            Ok(TraceRow {
                run_id: field(&rec, 0, line)?,
                iteration: field(&rec, 1, line)?,
                x: (0..dim).map(|k| field(&rec, 2 + k, line)).collect::<Result<_>>()?,
                y: field(&rec, 2 + dim, line)?,
                oc: field(&rec, 3 + dim, line)?,
                wallclock_ms: field(&rec, 4 + dim, line)?,
            })
        })
        .collect()
}

pub fn write_aggregate_csv(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_aggregate_csv(path: &Path) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FailureRow {
    run_id: usize,
    seed: u64,
    kind: FailureKind,
    message: String,
}

fn write_failures_csv(path: &Path, traces: &[RunTrace]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for t in traces {
        if let Some(RunFailure { kind, message }) = &t.failure {
            w.serialize(FailureRow {
                run_id: t.run_id,
                seed: t.seed,
                kind: *kind,
                message: message.clone(),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Run ids listed in a `failures.csv`.
pub fn read_failures_csv(path: &Path) -> Result<Vec<usize>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize::<FailureRow>()
        .map(|row| Ok(row?.run_id))
        .collect()
}

/// Recompute the aggregate from a trace file, excluding runs listed as failed.
pub fn aggregate_from_trace_csv(trace: &Path, failures: Option<&Path>) -> Result<Aggregate> {
    let rows = read_trace_csv(trace)?;
    let failed = match failures {
        Some(p) => read_failures_csv(p)?,
        None => Vec::new(),
    };
    let mut iterations: Vec<usize> = rows
        .iter()
        .filter(|r| !failed.contains(&r.run_id))
        .map(|r| r.iteration)
        .collect();
    iterations.sort_unstable();
    iterations.dedup();
    let rows = iterations
        .into_iter()
        .map(|it| {
            let values: Vec<f64> = rows
                .iter()
                .filter(|r| r.iteration == it && !failed.contains(&r.run_id))
                .map(|r| r.oc)
                .collect();
            AggregateRow::from_values(it, &values, failed.len())
        })
        .collect();
    Ok(Aggregate { rows })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), value)?;
    Ok(())
}

/// Write an experiment into `dir` (created if needed); returns the files written.
pub fn emit_results(result: &ExperimentResult, format: OutputFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    match format {
        OutputFormat::Json => {
            let p = dir.join("results.json");
            write_json(&p, result)?;
            written.push(p);
        }
        OutputFormat::Csv => {
            let dim = result.config.validate()?.dim();
            let p = dir.join("trace.csv");
            write_trace_csv(&p, &result.traces, dim)?;
            written.push(p);
            let p = dir.join("aggregate.csv");
            write_aggregate_csv(&p, &result.aggregate.rows)?;
            written.push(p);
            let p = dir.join("config.json");
            write_json(&p, &result.config)?;
            written.push(p);
            if result.n_failed() > 0 {
                let p = dir.join("failures.csv");
                write_failures_csv(&p, &result.traces)?;
                written.push(p);
            }
        }
    }
    Ok(written)
}
