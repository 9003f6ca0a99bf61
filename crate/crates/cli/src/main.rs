//! `gridshield`: synthesize, compress, visualize and exercise safety shields.

mod commands;
mod config;
mod heatmap;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Empty(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Empty(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gridshield", version, about = "Safety shields over grid abstractions of transformed state spaces")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Caps the worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a shield.
    Synth,
    /// Fit a polynomial to the boundary of a bounded-horizon safe set.
    Fit,
    /// Compress a shield into a decision tree.
    Tree {
        /// Shield file; defaults to the configured shield output.
        shield: Option<PathBuf>,
    },
    /// Train a Q-learning agent, optionally shielded, and evaluate it.
    Learn,
    /// Evaluate a trained Q-table or a random policy.
    Eval,
    /// Record a random-action trajectory.
    Rollout,
    /// Render a 2-D shield as SVG.
    Heatmap {
        /// Shield file; defaults to the configured shield output.
        shield: Option<PathBuf>,
    },
    /// Describe a shield, tree or Q-table file.
    Info { file: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Fit => "fit",
            Command::Tree { .. } => "tree",
            Command::Learn => "learn",
            Command::Eval => "eval",
            Command::Rollout => "rollout",
            Command::Heatmap { .. } => "heatmap",
            Command::Info { .. } => "info",
        }
    }
}

fn load_config(cli: &Cli) -> Result<Option<RunConfig>, CliError> {
    let Some(path) = &cli.config else { return Ok(None) };
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    Ok(Some(cfg))
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads: must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let cfg = load_config(&cli)?;
    let required = || {
        cfg.as_ref()
            .ok_or_else(|| CliError::Config(format!("--config is required for `{}`", cli.command.name())))
    };
    // Without a config, outputs land in --out-dir (or the working directory).
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let shield_arg = |arg: &Option<PathBuf>| match (arg, &cfg) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(c)) => Ok(c.output(&c.outputs.shield)),
        (None, None) => Err(CliError::Config(format!("`{}` needs a shield file or --config", cli.command.name()))),
    };
    match &cli.command {
        Command::Synth => commands::synth(required()?),
        Command::Fit => commands::fit(required()?),
        Command::Learn => commands::learn(required()?),
        Command::Eval => commands::eval(required()?),
        Command::Rollout => commands::rollout(required()?),
        Command::Tree { shield } => {
            let out = match &cfg {
                Some(c) => c.output(&c.outputs.tree),
                None => out_dir.join("tree.bin"),
            };
            commands::tree(&shield_arg(shield)?, &out)
        }
        Command::Heatmap { shield } => {
            let (out, project) = match &cfg {
                Some(c) => (c.output(&c.outputs.heatmap), c.heatmap.back_projection.then_some(c.heatmap.resolution)),
                None => (out_dir.join("heatmap.svg"), None),
            };
            commands::heatmap(&shield_arg(shield)?, &out, project)
        }
        Command::Info { file } => commands::info(file),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
