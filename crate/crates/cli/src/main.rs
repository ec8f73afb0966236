//! `rvfl`: width bounds, lemma validation, experiments, and network build/eval.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod bounds;
mod config;
mod experiment;
mod network;
mod validate;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub const VERSION: &str = env!("RVFL_VERSION");

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<rvfl_core::Error> for CliError {
    fn from(e: rvfl_core::Error) -> Self {
        fail(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        fail(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        fail(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        fail(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn fail(message: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        message: message.into(),
    }
}

#[derive(Parser)]
#[command(name = "rvfl", version = VERSION, about = "Random-feature ReLU approximation of Lipschitz functions")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "RVFL_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Width bounds and the parameter schedule.
    Bounds(bounds::BoundsArgs),
    /// Numerical checks of every step of the construction.
    ValidateLemmas(validate::ValidateArgs),
    /// Error against width over seeds, written as CSV.
    Experiment(experiment::ExperimentArgs),
    /// Builds one network and writes it as JSON.
    Build(network::BuildArgs),
    /// Evaluates a saved network at points from a CSV file.
    Eval(network::EvalArgs),
}

fn run(cli: Cli) -> CliResult<u8> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| fail(e.to_string()))?;
    }
    match cli.command {
        Command::Bounds(a) => bounds::run(a).map(|_| 0),
        Command::ValidateLemmas(a) => validate::run(a),
        Command::Experiment(a) => experiment::run(a).map(|_| 0),
        Command::Build(a) => network::build(a).map(|_| 0),
        Command::Eval(a) => network::eval(a).map(|_| 0),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
