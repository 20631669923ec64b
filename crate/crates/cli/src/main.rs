//! `orliczkit` command line front-end.
//!
//! Exit codes: 0 success, 1 runtime failure or an inconsistent finding,
//! 2 bound or certificate violation, 3 divergence detected, 4 config error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use orliczkit::grid::GridPolicy;

#[derive(Debug, Parser)]
#[command(name = "orliczkit", version, about = "Weighted Orlicz-Poincare inequalities in one dimension")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON run configuration; defaults are used for missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for the JSON report and CSV traces.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for random test families (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Scan grid policy: uniform, geometric-a, geometric-b or union.
    #[arg(long, global = true, value_parser = parse_policy)]
    grid: Option<GridPolicy>,
}

fn parse_policy(s: &str) -> Result<GridPolicy, String> {
    s.parse::<GridPolicy>().map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Gauge norm of a function.
    Norm,
    /// A characterizing constant with its supremand trace.
    Constant,
    /// Ratio checks against the sufficiency bounds.
    Verify,
    /// The degenerate-weight example.
    Example,
    /// Young-function certificates.
    CheckYoung,
    /// Table of the complementary function.
    Complementary,
}

/// How a command ended.
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl From<orliczkit::Error> for Failure {
    fn from(e: orliczkit::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ORLICZKIT_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.common.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(4);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure worker pool: {e}");
            return ExitCode::from(4);
        }
    }
    let result = match cli.command {
        Command::Norm => commands::norm(&cli.common),
        Command::Constant => commands::constant(&cli.common),
        Command::Verify => commands::verify(&cli.common),
        Command::Example => commands::example(&cli.common),
        Command::CheckYoung => commands::check_young(&cli.common),
        Command::Complementary => commands::complementary(&cli.common),
    };
    match result {
        Ok(run) => match output::emit(&run, cli.common.out.as_deref()) {
            Ok(()) => {
                for note in &run.notes {
                    eprintln!("{note}");
                }
                ExitCode::from(run.exit_code)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(4)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
