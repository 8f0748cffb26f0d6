//! Benchmark runner for the optimizer library.
//!
//! Runs a grid of (problem, variant, window size) combinations and prints
//! the results as CSV or a markdown table. Configuration mistakes (unknown
//! problems, bad dimensions, malformed flags) exit with code 2 before any
//! optimization starts; failures of individual runs are recorded in the
//! report instead.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use fastbfgs::bench::{
    emit, run_suite, ProblemRequest, ReportFormat, SuiteSpec, THREADS_ENV,
};
use fastbfgs::optimizers::Variant;
use fastbfgs::problems::list_problems;

/// The standard grid: every registered problem family at its standard
/// dimension, all five variants, m = 8.
const PRESET_PAPER: [&str; 15] = [
    "ARWHEAD", "BDEXP", "COSINE", "DQRTIC", "EDENSCH", "EG2", "ENGVAL1", "EXTROSNB",
    "HIMMELBG", "LIARWHD", "NONDIA", "POWELLSG", "SROSENBR", "TOINTGSS", "TQUARTIC",
];

#[derive(Parser, Debug)]
#[command(
    name = "subspace-bench",
    version,
    about = "Benchmark quasi-Newton optimizers on classic test problems",
    after_help = "Problems are NAME or NAME@N (e.g. ARWHEAD@1024). \
                  Run with --list to see the registry."
)]
struct Cli {
    /// Problem instance, NAME or NAME@N; repeatable.
    #[arg(long = "problem", value_name = "NAME[@N]")]
    problems: Vec<String>,

    /// Optimizer to run, or `all`.
    #[arg(long, default_value = "all", value_parser = parse_variants, value_name = "VARIANT")]
    variant: Vec<Vec<Variant>>,

    /// Window size for the limited-memory methods; repeatable.
    #[arg(long = "m", value_name = "INT")]
    ms: Vec<usize>,

    /// Convergence tolerance on the gradient norm.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,

    /// Evaluation budget per run.
    #[arg(long = "max-nfg", default_value_t = 1000, value_name = "INT")]
    max_nfg: usize,

    /// Output format.
    #[arg(long, default_value = "csv", value_parser = ["csv", "markdown"])]
    format: String,

    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Worker threads for the grid (SUBSPACE_BENCH_THREADS overrides).
    #[arg(long, value_name = "INT")]
    jobs: Option<usize>,

    /// Canned run specification; `paper` is the full standard grid.
    #[arg(long, value_parser = ["paper"])]
    preset: Option<String>,

    /// Print the registered problems and exit.
    #[arg(long)]
    list: bool,
}

fn parse_variants(s: &str) -> Result<Vec<Variant>, String> {
    if s == "all" {
        return Ok(Variant::ALL.to_vec());
    }
    s.parse::<Variant>().map(|v| vec![v]).map_err(|e| e.to_string())
}

/// Print to stdout, treating a closed pipe as a normal exit: downstream
/// `head`-style consumers hang up early, and dying with a backtrace over
/// that would make the tool useless in pipelines.
fn emit_stdout(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(err) = out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        if err.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if cli.list {
        let mut listing = String::new();
        for (name, dims) in list_problems() {
            let standard = dims.first().copied().unwrap_or(0);
            listing.push_str(&format!("{name} (standard n = {standard})\n"));
        }
        emit_stdout(&listing);
        return ExitCode::SUCCESS;
    }

    match build_and_run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn build_and_run(cli: &Cli) -> anyhow::Result<()> {
    let mut problems = Vec::new();
    if cli.preset.as_deref() == Some("paper") {
        for name in PRESET_PAPER {
            problems.push(ProblemRequest { name: name.to_string(), n: None });
        }
    }
    for arg in &cli.problems {
        problems.push(ProblemRequest::parse(arg)?);
    }

    let mut variants = Vec::new();
    for v in cli.variant.iter().flatten() {
        if !variants.contains(v) {
            variants.push(*v);
        }
    }

    let jobs = match std::env::var(THREADS_ENV) {
        Ok(value) => value
            .parse::<usize>()
            .map_err(|_| anyhow::anyhow!("{THREADS_ENV} must be a positive integer, got {value:?}"))?
            .max(1),
        Err(_) => cli.jobs.unwrap_or(1).max(1),
    };

    let spec = SuiteSpec {
        problems,
        variants,
        ms: if cli.ms.is_empty() { vec![8] } else { cli.ms.clone() },
        tol: cli.tol,
        max_nfg: cli.max_nfg,
        jobs,
    };

    let format: ReportFormat = cli.format.parse()?;
    let report = run_suite(&spec)?;
    let text = emit(&report, format);

    match &cli.out {
        Some(path) => fs::write(path, text)?,
        None => emit_stdout(&text),
    }
    Ok(())
}
