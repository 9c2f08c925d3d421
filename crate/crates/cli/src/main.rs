//! `distal`: runs the interference, regression, sequential and rehearsal
//! experiments and the structural self-test.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use distal_core::harness::{self, parse_model_list, Experiment, ExperimentConfig, ModelName};
use distal_core::props::{self, PropConfig};

#[derive(Parser)]
#[command(name = "distal", version, about = "Distal interference experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single-update perturbation and distal-interference trials.
    Perturbation(RunArgs),
    /// Joint training on the 2-D target.
    Regression(RunArgs),
    /// One task per grid cell, no rehearsal.
    Sequential(RunArgs),
    /// One task per grid cell with pseudo-rehearsal.
    Rehearsal(RunArgs),
    /// Runs the property and gradient checks; exits 1 on any violation.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for manifest.txt, CSV tables and PGM heatmaps.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Comma-separated subset of wide_relu, deep_relu, abel, spline_ann, lookup.
    #[arg(long, value_parser = parse_models)]
    models: Option<ModelList>,
    /// File of `key=value` lines; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone)]
struct ModelList(Vec<ModelName>);

fn parse_models(s: &str) -> Result<ModelList, String> {
    parse_model_list(s).map(ModelList).map_err(|e| e.to_string())
}

fn build_config(experiment: Experiment, args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(experiment);
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        cfg.apply_config_text(&text)
            .with_context(|| format!("in {}", path.display()))?;
    }
    if let Some(seed) = args.seed {
        cfg.set("seed", &seed.to_string())?;
    }
    if let Some(models) = &args.models {
        let names: Vec<&str> = models.0.iter().map(|m| m.as_str()).collect();
        cfg.set("models", &names.join(","))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_experiment(experiment: Experiment, args: &RunArgs) -> Result<()> {
    let cfg = build_config(experiment, args)?;
    print!("{}", harness::manifest(&cfg)?);
    let written = harness::run_to_dir(&cfg, &args.out_dir)?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn selftest(seed: u64) -> bool {
    let cfg = PropConfig {
        seed,
        ..PropConfig::default()
    };
    let checks = props::run_all(&cfg);
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    println!("{} checks, {failed} failed", checks.len());
    failed == 0
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Perturbation(a) => run_experiment(Experiment::Perturbation, a),
        Command::Regression(a) => run_experiment(Experiment::Regression, a),
        Command::Sequential(a) => run_experiment(Experiment::Sequential, a),
        Command::Rehearsal(a) => run_experiment(Experiment::Rehearsal, a),
        Command::Selftest { seed } => {
            return if selftest(*seed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
