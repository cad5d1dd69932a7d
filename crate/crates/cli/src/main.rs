//! `glyphlearn`: learn, rewrite, evaluate and measure stroke-program corpora.

mod artifacts;
mod commands;
mod config;

use std::fmt::Display;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{RunConfig, SharedArgs};

#[derive(Debug, Parser)]
#[command(name = "glyphlearn", version, about = "Library learning over stroke-program corpora")]
struct Cli {
    #[command(flatten)]
    shared: SharedArgs,
    /// More log output; repeat for debug messages.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn a library for a corpus; writes library.txt, rewritten.jsonl, trace.jsonl and report.json.
    Learn(commands::LearnArgs),
    /// Rewrite a corpus with an existing library; writes rewritten.jsonl.
    Rewrite(commands::RewriteArgs),
    /// Score learned spans against gold decompositions; writes spans.jsonl and scores.{json,csv}.
    Eval(commands::EvalArgs),
    /// Complexity reports for one or more corpora; writes metrics.{json,csv}.
    Metrics(commands::MetricsArgs),
    /// Derive stroke primitives from trajectories and encode corpora.
    Ingest(commands::IngestArgs),
}

#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed or inconsistent input; exit code 2.
    BadInput(String),
    /// Anything else; exit code 1.
    Internal(String),
}

impl CliError {
    pub fn internal(e: impl Display) -> Self {
        CliError::Internal(e.to_string())
    }
}

pub enum Status {
    Done,
    /// Artifacts were written, but learning stopped at the iteration cap.
    CapHit(usize),
}

fn run(cli: &Cli) -> Result<Status, CliError> {
    let config = RunConfig::resolve(&cli.shared)?;
    if let Some(n) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(CliError::internal)?;
    }
    match &cli.command {
        Command::Learn(a) => commands::learn(a, &config),
        Command::Rewrite(a) => commands::rewrite(a, &config),
        Command::Eval(a) => commands::eval(a, &config),
        Command::Metrics(a) => commands::metrics(a, &config),
        Command::Ingest(a) => commands::ingest(a, &config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::CapHit(cap)) => {
            eprintln!("error: learning stopped at the iteration cap of {cap}; partial results were written");
            ExitCode::from(1)
        }
        Err(CliError::BadInput(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("error: internal: {msg}");
            ExitCode::from(1)
        }
    }
}
