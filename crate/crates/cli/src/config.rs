use std::path::PathBuf;

use clap::Args;
use glyphlearn::evaluation::SpanMode;
use glyphlearn::{CostModel, LearnConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Flags shared by every subcommand. Each overrides the config file, which
/// overrides the built-in default.
#[derive(Debug, Clone, Default, Args)]
pub struct SharedArgs {
    /// TOML file with any of the settings below, in snake_case.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Description length of each leaf.
    #[arg(long, global = true, value_name = "N")]
    pub cost_terminal: Option<u64>,
    /// Description length of each application node.
    #[arg(long, global = true, value_name = "N")]
    pub cost_app: Option<u64>,
    /// Most parameters a learned function may take.
    #[arg(long, global = true, value_name = "N")]
    pub max_arity: Option<usize>,
    /// Most functions the learner may add.
    #[arg(long, global = true, value_name = "N")]
    pub iters: Option<usize>,
    /// Seed for random baselines and k-means.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// How a function occurrence maps to a stroke interval.
    #[arg(long, global = true, value_parser = parse_span_mode, value_name = "subtree|body")]
    pub span_mode: Option<SpanMode>,
    /// Score the whole-glyph span like any other bracket.
    #[arg(long, global = true)]
    pub include_full_span: bool,
    /// Directory for output artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

fn parse_span_mode(s: &str) -> Result<SpanMode, String> {
    s.parse().map_err(|e: glyphlearn::Error| e.to_string())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    cost_terminal: Option<u64>,
    cost_app: Option<u64>,
    max_arity: Option<usize>,
    iters: Option<usize>,
    seed: Option<u64>,
    threads: Option<usize>,
    span_mode: Option<SpanMode>,
    include_full_span: Option<bool>,
    out: Option<PathBuf>,
}

/// Resolved settings of one run. Everything except the thread count is
/// recorded in the artifacts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub cost_terminal: u64,
    pub cost_app: u64,
    pub max_arity: usize,
    pub iters: usize,
    pub seed: u64,
    #[serde(skip)]
    pub threads: Option<usize>,
    pub span_mode: SpanMode,
    pub include_full_span: bool,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn resolve(args: &SharedArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))?;
                toml::from_str(&text).map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))?
            }
            None => ConfigFile::default(),
        };
        let cost = CostModel::default();
        let learn = LearnConfig::default();
        let config = RunConfig {
            cost_terminal: args.cost_terminal.or(file.cost_terminal).unwrap_or(cost.terminal),
            cost_app: args.cost_app.or(file.cost_app).unwrap_or(cost.application),
            max_arity: args.max_arity.or(file.max_arity).unwrap_or(learn.max_arity),
            iters: args.iters.or(file.iters).unwrap_or(learn.max_iterations),
            seed: args.seed.or(file.seed).unwrap_or(0),
            threads: args.threads.or(file.threads),
            span_mode: args.span_mode.or(file.span_mode).unwrap_or_default(),
            include_full_span: args.include_full_span || file.include_full_span.unwrap_or(false),
            out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.cost_model()?;
        if self.threads == Some(0) {
            return Err(CliError::BadInput("--threads must be at least 1".into()));
        }
        Ok(())
    }

    pub fn cost_model(&self) -> Result<CostModel, CliError> {
        CostModel::new(self.cost_terminal, self.cost_app).map_err(|e| CliError::BadInput(e.to_string()))
    }

    pub fn learn_config(&self) -> LearnConfig {
        LearnConfig {
            max_arity: self.max_arity,
            max_iterations: self.iters,
        }
    }
}
