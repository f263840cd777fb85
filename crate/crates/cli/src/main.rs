//! `dmetgeo run|validate|scan <config>`.
//!
//! Exit status: 0 converged (or a clean validation), 2 finished without
//! converging (outputs are still written), 1 bad input.

mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{inspect, ConfigError, Method, Prepared, RunConfig};
use run::{execute, Finish};

/// Environment variable overriding the worker-thread count.
const WORKERS_VAR: &str = "DMETGEO_WORKERS";

#[derive(Parser)]
#[command(name = "dmetgeo", version, about = "DMET + VQE geometry optimization on a statevector simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the method named in `[optimizer] method`.
    Run { config: PathBuf },
    /// Check a config and print projected problem sizes without solving anything.
    Validate { config: PathBuf },
    /// Evaluate the `[scan]` grid.
    Scan { config: PathBuf },
}

fn set_workers() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var(WORKERS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError::new(WORKERS_VAR, format!("expected a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError::new(WORKERS_VAR, e.to_string()))
}

fn validate(path: &Path) -> ExitCode {
    println!("config: {}", path.display());
    let problems = match RunConfig::load(path) {
        Err(e) => vec![e],
        Ok(cfg) => match Prepared::new(&cfg) {
            Err(e) => vec![e],
            Ok(prep) => {
                let report = inspect(&cfg, &prep, cfg.method);
                for line in &report.lines {
                    println!("{line}");
                }
                report.problems
            }
        },
    };
    if problems.is_empty() {
        println!("ok");
        return ExitCode::SUCCESS;
    }
    for p in &problems {
        println!("problem: {p}");
    }
    println!("{} problem(s)", problems.len());
    ExitCode::from(1)
}

fn run(path: &Path, scan: bool) -> ExitCode {
    let result = set_workers().and_then(|_| RunConfig::load(path)).and_then(|cfg| {
        let method = if scan { Method::Scan } else { cfg.method };
        execute(&cfg, method)
    });
    match result {
        Ok(Finish::Converged) => ExitCode::SUCCESS,
        Ok(Finish::NotConverged) => {
            eprintln!("warning: finished without converging; see summary.json");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match cli.command {
        Command::Run { config } => run(&config, false),
        Command::Validate { config } => validate(&config),
        Command::Scan { config } => run(&config, true),
    }
}
