//! Benchmark suite: runs a (problem, variant, m) grid and renders the
//! results as CSV or a markdown table.
//!
//! Rows always come back in request order (problem-major, then variant,
//! then window size), no matter how many worker threads executed the grid.
//! Wall time is recorded per run but nothing in the test suites asserts on
//! it.

use std::collections::BTreeSet;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optimizers::{
    run, OptimizerConfig, OptimizerError, RunStatus, Variant, DENSE_BFGS_MAX_N,
};
use crate::problems::{get_problem, ProblemError};

/// Environment variable that overrides the requested worker count.
pub const THREADS_ENV: &str = "SUBSPACE_BENCH_THREADS";

/// One problem instance to benchmark; `n = None` means the registry's
/// standard dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemRequest {
    pub name: String,
    pub n: Option<usize>,
}

impl ProblemRequest {
    /// Parses `NAME` or `NAME@N`.
    pub fn parse(arg: &str) -> Result<Self, SuiteError> {
        let bad = |reason: &str| SuiteError::BadRequest {
            arg: arg.to_string(),
            reason: reason.to_string(),
        };
        match arg.split_once('@') {
            None => {
                if arg.is_empty() {
                    return Err(bad("empty problem name"));
                }
                Ok(ProblemRequest { name: arg.to_string(), n: None })
            }
            Some((name, dim)) => {
                if name.is_empty() {
                    return Err(bad("empty problem name"));
                }
                let n = dim
                    .parse::<usize>()
                    .map_err(|_| bad("dimension after '@' must be a positive integer"))?;
                if n == 0 {
                    return Err(bad("dimension must be at least 1"));
                }
                Ok(ProblemRequest { name: name.to_string(), n: Some(n) })
            }
        }
    }
}

/// Everything a suite run needs.
#[derive(Debug, Clone)]
pub struct SuiteSpec {
    pub problems: Vec<ProblemRequest>,
    pub variants: Vec<Variant>,
    pub ms: Vec<usize>,
    pub tol: f64,
    pub max_nfg: usize,
    /// Worker threads; 1 runs the grid sequentially.
    pub jobs: usize,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        SuiteSpec {
            problems: Vec::new(),
            variants: Variant::ALL.to_vec(),
            ms: vec![8],
            tol: 1e-5,
            max_nfg: 1000,
            jobs: 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("invalid problem argument {arg:?}: {reason}")]
    BadRequest { arg: String, reason: String },
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error("malformed report: {0}")]
    Csv(#[from] csv::Error),
}

/// Result of one (problem, variant, m) run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub problem: String,
    pub n: usize,
    pub variant: Variant,
    pub m: usize,
    pub nfg: usize,
    /// Gradient-only curvature probes, outside the `nfg` tally.
    pub probes: usize,
    pub status: RunStatus,
    pub gnorm: f64,
    pub seconds: f64,
}

/// Description of the run that produced a report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchMeta {
    pub tol: f64,
    pub max_nfg: usize,
    pub jobs: usize,
    pub version: String,
    pub timestamp: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub meta: BenchMeta,
    pub rows: Vec<BenchRow>,
}

#[derive(Debug, Clone)]
struct Task {
    problem: String,
    n: usize,
    variant: Variant,
    m: usize,
}

/// Runs the full grid. All configuration problems (unknown names, bad
/// dimensions, a dense-BFGS request past its capacity) surface as errors
/// before any optimization starts; failures of individual runs are data in
/// the rows, not errors.
pub fn run_suite(spec: &SuiteSpec) -> Result<BenchReport, SuiteError> {
    let mut tasks = Vec::new();
    for request in &spec.problems {
        // Resolving through the registry validates the name and dimension
        // and yields the canonical spelling for the report.
        let probe = match request.n {
            Some(n) => get_problem(&request.name, n)?,
            None => {
                let n = crate::problems::standard_dim(&request.name)
                    .ok_or_else(|| ProblemError::UnknownName(request.name.clone()))?;
                get_problem(&request.name, n)?
            }
        };
        for &variant in &spec.variants {
            if variant == Variant::Bfgs && probe.dim() > DENSE_BFGS_MAX_N {
                return Err(OptimizerError::Capacity { n: probe.dim(), max: DENSE_BFGS_MAX_N }
                    .into());
            }
            for &m in &spec.ms {
                let config = task_config(spec, variant, m);
                config.validate()?;
                tasks.push(Task {
                    problem: probe.name().to_string(),
                    n: probe.dim(),
                    variant,
                    m,
                });
            }
        }
    }

    let rows = if spec.jobs <= 1 || tasks.len() <= 1 {
        tasks.iter().map(|t| execute(t, spec)).collect()
    } else {
        execute_parallel(&tasks, spec)
    };

    Ok(BenchReport {
        meta: BenchMeta {
            tol: spec.tol,
            max_nfg: spec.max_nfg,
            jobs: spec.jobs,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        },
        rows,
    })
}

fn task_config(spec: &SuiteSpec, variant: Variant, m: usize) -> OptimizerConfig {
    OptimizerConfig {
        variant,
        m,
        tol: spec.tol,
        max_nfg: spec.max_nfg,
        ..Default::default()
    }
}

fn execute(task: &Task, spec: &SuiteSpec) -> BenchRow {
    let problem = get_problem(&task.problem, task.n)
        .expect("task was resolved through the registry before running");
    let config = task_config(spec, task.variant, task.m);
    let started = Instant::now();
    let trace = run(&problem, &config).expect("task configuration was validated up front");
    let seconds = started.elapsed().as_secs_f64();
    BenchRow {
        problem: task.problem.clone(),
        n: task.n,
        variant: task.variant,
        m: task.m,
        nfg: trace.nfg,
        probes: trace.probes,
        status: trace.status,
        gnorm: trace.final_gnorm,
        seconds,
    }
}

fn execute_parallel(tasks: &[Task], spec: &SuiteSpec) -> Vec<BenchRow> {
    let slots: Vec<Mutex<Option<BenchRow>>> =
        tasks.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = spec.jobs.min(tasks.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(task) = tasks.get(i) else { break };
                let row = execute(task, spec);
                *slots[i].lock().expect("result slot poisoned") = Some(row);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| {
            slot.into_inner()
                .expect("result slot poisoned")
                .expect("every task index was claimed by a worker")
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = SuiteError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" => Ok(ReportFormat::Markdown),
            other => Err(SuiteError::BadRequest {
                arg: other.to_string(),
                reason: "expected csv or markdown".to_string(),
            }),
        }
    }
}

pub fn emit(report: &BenchReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => emit_csv(report),
        ReportFormat::Markdown => emit_markdown(report),
    }
}

/// CSV with the header `problem,n,variant,m,nfg,probes,status,gnorm,seconds`.
/// Floats are written in shortest round-trip form, so parsing the output
/// recovers them bit for bit.
pub fn emit_csv(report: &BenchReport) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in &report.rows {
        writer.serialize(row).expect("writing to a Vec cannot fail");
    }
    let bytes = writer.into_inner().expect("writer flushes cleanly");
    String::from_utf8(bytes).expect("csv output is ASCII")
}

/// Parses rows previously written by [`emit_csv`].
pub fn from_csv(text: &str) -> Result<Vec<BenchRow>, SuiteError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.deserialize::<BenchRow>() {
        rows.push(record?);
    }
    Ok(rows)
}

/// Pivoted markdown table: one row per problem instance, one column per
/// requested (variant, m) combination. Converged cells carry nfg; runs that
/// ran out of budget render as `>{budget}` and line-search failures as
/// `--`.
pub fn emit_markdown(report: &BenchReport) -> String {
    let mut combos: Vec<(Variant, usize)> = Vec::new();
    let mut instances: Vec<(String, usize)> = Vec::new();
    for row in &report.rows {
        if !combos.contains(&(row.variant, row.m)) {
            combos.push((row.variant, row.m));
        }
        let key = (row.problem.clone(), row.n);
        if !instances.contains(&key) {
            instances.push(key);
        }
    }
    let distinct_ms: BTreeSet<usize> = combos.iter().map(|&(_, m)| m).collect();
    let label = |variant: Variant, m: usize| {
        if distinct_ms.len() > 1 {
            format!("{variant} (m={m})")
        } else {
            variant.to_string()
        }
    };

    let mut out = String::new();
    out.push_str("| problem | n |");
    for &(variant, m) in &combos {
        out.push_str(&format!(" {} |", label(variant, m)));
    }
    out.push('\n');
    out.push_str("| --- | --- |");
    for _ in &combos {
        out.push_str(" --- |");
    }
    out.push('\n');
    for (problem, n) in &instances {
        out.push_str(&format!("| {problem} | {n} |"));
        for &(variant, m) in &combos {
            let cell = report
                .rows
                .iter()
                .find(|r| {
                    r.problem == *problem && r.n == *n && r.variant == variant && r.m == m
                })
                .map(|r| match r.status {
                    RunStatus::Converged => r.nfg.to_string(),
                    RunStatus::BudgetExhausted => format!(">{}", report.meta.max_nfg),
                    RunStatus::LineSearchFailure => "--".to_string(),
                })
                .unwrap_or_default();
            out.push_str(&format!(" {cell} |"));
        }
        out.push('\n');
    }
    out
}
