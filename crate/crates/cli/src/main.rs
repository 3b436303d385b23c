//! `summing run <config>` and `summing verify`.

mod config;
mod error;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use config::ExperimentConfig;
use error::CliError;
use tasks::{Status, TaskResult};

/// Default worker count for the parallel searches.
const THREADS_ENV: &str = "SUMMING_THREADS";

#[derive(Parser)]
#[command(name = "summing", version, about = "Summing constants, Pietsch measures and factorizations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Report path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides every seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Also writes measure supports and weights as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Runs the acceptance suite and prints its table.
    Verify {
        /// Criterion ids to run, e.g. `--filter 1,4`.
        #[arg(long, value_delimiter = ',')]
        filter: Vec<u32>,
        #[arg(long)]
        seed: Option<u64>,
        /// Multiplies every tolerance; `0` shows the failure path.
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Environment {
    version: String,
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Report {
    environment: Environment,
    config: ExperimentConfig,
    status: Status,
    result: TaskResult,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn write_csv(path: &Path, result: &TaskResult) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: path.display().to_string(), source };
    let mut w = csv::WriterBuilder::new().flexible(true).from_path(path)?;
    w.write_record(["measure", "index", "weight", "point"])?;
    for (name, m) in result.measures() {
        for (i, (x, wt)) in m.support.iter().zip(&m.weights).enumerate() {
            let mut rec = vec![name.clone(), i.to_string(), wt.to_string()];
            rec.extend(x.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(io)
}

fn run(config: &Path, out: Option<&Path>, seed: Option<u64>, csv_path: Option<&Path>) -> Result<Status, CliError> {
    let text = read(config)?;
    let mut cfg = ExperimentConfig::parse(&text)
        .map_err(|e| CliError::InFile { path: config.display().to_string(), inner: Box::new(e) })?;
    if let Some(s) = seed {
        cfg.reseed(s);
    }
    let start = Instant::now();
    let result = tasks::execute(&cfg)?;
    eprintln!("timing: task {:?} took {:.3} s", cfg.task, start.elapsed().as_secs_f64());
    let status = result.status(cfg.solver.core.summing.sip.tol_duality);
    if let Some(p) = csv_path {
        write_csv(p, &result)?;
    }
    if let TaskResult::VerifySuite(rows) = &result {
        eprint!("{}", tasks::suite_table(rows));
    }
    let report = Report {
        environment: Environment { version: env!("CARGO_PKG_VERSION").to_string(), seed: cfg.seed() },
        config: cfg,
        status,
        result,
    };
    let json = serde_json::to_string_pretty(&report)? + "\n";
    match out {
        Some(p) => write(p, &json)?,
        None => print!("{json}"),
    }
    Ok(status)
}

fn set_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    set_threads();
    let outcome = match cli.command {
        Command::Run { config, out, seed, csv } => run(&config, out.as_deref(), seed, csv.as_deref()),
        Command::Verify { filter, seed, tolerance_scale } => {
            let start = Instant::now();
            let rows = tasks::run_suite_with(seed.unwrap_or(summing_core::optimize::DEFAULT_SEED), tolerance_scale, &filter);
            print!("{}", tasks::suite_table(&rows));
            eprintln!("timing: suite took {:.3} s", start.elapsed().as_secs_f64());
            Ok(if rows.iter().all(|r| r.pass) { Status::Certified } else { Status::Failed })
        }
    };
    match outcome {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
