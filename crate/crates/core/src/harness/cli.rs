//! Command-line front end. Exit codes: 0 success, 1 usage, 2 data, 3 non-convergence.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};

use super::config::ExperimentConfig;
use super::experiments::{
    run_ablation, run_baseline, run_explain, run_explore, run_ingest, run_longitudinal_compare, run_model_comparison,
};
use super::synth::write_synthetic;

#[derive(Debug, Parser)]
#[command(name = "income-panel", version, about = "Income-class experiments on longitudinal survey panels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Flags override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Codebook CSV.
    #[arg(long)]
    pub codebook: Option<PathBuf>,
    /// Wide-format data CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Extra config setting, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest and clean; writes the long table and a summary.
    Ingest(Common),
    /// Spearman correlation matrix and pruning outcome.
    Explore(Common),
    /// Majority-class baseline.
    Baseline(Common),
    /// Every configured model on one shared split.
    Compare(Common),
    /// Latest year only against an equal-size multi-year sample.
    Longitudinal(Common),
    /// Drop each feature in turn.
    Ablate(Common),
    /// SHAP attributions and feature ranking.
    Explain(Common),
    /// Write a synthetic codebook and wide data file.
    Synth(Common),
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Ingest(c)
            | Command::Explore(c)
            | Command::Baseline(c)
            | Command::Compare(c)
            | Command::Longitudinal(c)
            | Command::Ablate(c)
            | Command::Explain(c)
            | Command::Synth(c) => c,
        }
    }
}

/// Config file (if any) with `--set` pairs and flags applied on top.
pub fn resolve_config(c: &Common) -> Result<ExperimentConfig> {
    let mut config = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    for pair in &c.set {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{pair}`")))?;
        config.set(k.trim(), v.trim())?;
    }
    let path = |p: &PathBuf| p.to_string_lossy().into_owned();
    if let Some(p) = &c.codebook {
        config.set("codebook", &path(p))?;
    }
    if let Some(p) = &c.data {
        config.set("data", &path(p))?;
    }
    if let Some(p) = &c.out {
        config.set("out", &path(p))?;
    }
    if let Some(s) = c.seed {
        config.set("seed", &s.to_string())?;
    }
    Ok(config)
}

/// Runs one parsed command and returns the files it wrote.
pub fn execute(command: &Command) -> Result<Vec<PathBuf>> {
    let config = resolve_config(command.common())?;
    let out = config.out.clone();
    let bundle = match command {
        Command::Ingest(_) => return run_ingest(&config),
        Command::Explore(_) => return run_explore(&config),
        Command::Synth(_) => {
            write_synthetic(&config.synth, config.seed()?, &out)?;
            return Ok(vec![out.join("codebook.csv"), out.join("data.csv")]);
        }
        Command::Baseline(_) => run_baseline(&config)?,
        Command::Compare(_) => run_model_comparison(&config)?,
        Command::Longitudinal(_) => run_longitudinal_compare(&config)?,
        Command::Ablate(_) => run_ablation(&config)?,
        Command::Explain(_) => run_explain(&config)?,
    };
    bundle.write(&out)
}

/// Parses `args` (program name first), runs, reports to stdout/stderr and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
