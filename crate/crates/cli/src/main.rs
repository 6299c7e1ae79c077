//! Experiment runner for the coupled-map-lattice workbench.
//!
//! One subcommand per experiment kind, each driven by a JSON config file,
//! plus a catalog of named recipes. Exit status: 0 on success, 1 when a
//! certification check fails or a module reports an error, 2 on malformed
//! configs.

mod config;
mod recipes;
mod runner;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use config::{ExperimentConfig, OutputFormat};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cml",
    version,
    about = "Simulation and certification workbench for weakly interacting coupled map lattices"
)]
struct Cli {
    /// Master seed; overrides the seed in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default from config, else `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Artifact format for series data.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads (also settable via CML_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Parser)]
struct ConfigArg {
    /// Path to the experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run one lattice trajectory.
    Simulate(ConfigArg),
    /// Run a seeded ensemble of trajectories.
    Ensemble(ConfigArg),
    /// Three-particle gap recurrence (exact, quantized or float).
    Lemma5(ConfigArg),
    /// Ring shrink factors: closed form vs. planar simulation.
    Shrink(ConfigArg),
    /// Build a transfer-operator matrix.
    Ulam(ConfigArg),
    /// Certify the Lasota-Yorke inequality on random measures.
    LyCheck(ConfigArg),
    /// Certify the perturbation bounds and sharpness identity.
    PerturbCheck(ConfigArg),
    /// Compute an invariant density by damped power iteration.
    Invariant(ConfigArg),
    /// Weak-distance scaling of perturbed invariant measures.
    ConvergenceStudy(ConfigArg),
    /// Iterate the nonlinear mean-field operator.
    Meanfield(ConfigArg),
    /// Diagonal-neighborhood mass: partition bound vs. Monte Carlo.
    DiagBounds(ConfigArg),
    /// Norm gains of the interaction block matrix.
    ContractionCheck(ConfigArg),
    /// List the named preconfigured experiments.
    Recipes,
    /// Run a named preconfigured experiment.
    Recipe { name: String },
}

impl Command {
    fn kind(&self) -> Option<(&'static str, &ConfigArg)> {
        match self {
            Command::Simulate(a) => Some(("simulate", a)),
            Command::Ensemble(a) => Some(("ensemble", a)),
            Command::Lemma5(a) => Some(("lemma5", a)),
            Command::Shrink(a) => Some(("shrink", a)),
            Command::Ulam(a) => Some(("ulam", a)),
            Command::LyCheck(a) => Some(("ly_check", a)),
            Command::PerturbCheck(a) => Some(("perturb_check", a)),
            Command::Invariant(a) => Some(("invariant", a)),
            Command::ConvergenceStudy(a) => Some(("convergence_study", a)),
            Command::Meanfield(a) => Some(("meanfield", a)),
            Command::DiagBounds(a) => Some(("diag_bounds", a)),
            Command::ContractionCheck(a) => Some(("contraction_check", a)),
            Command::Recipes | Command::Recipe { .. } => None,
        }
    }
}

fn configure_threads(cli_threads: Option<usize>) -> Result<()> {
    let threads = cli_threads.or_else(|| {
        std::env::var("CML_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn apply_overrides(config: &mut ExperimentConfig, cli: &Cli) {
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(fmt) = cli.format {
        config.format = match fmt {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        };
    }
    if let Some(out) = &cli.out {
        config.out = Some(out.display().to_string());
    }
}

/// Exit codes: 0 success, 1 failed checks or runtime errors, 2 malformed
/// configs.
const EXIT_FAILURE: u8 = 1;
const EXIT_BAD_CONFIG: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_FAILURE);
    }
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verdict: FAILED");
            ExitCode::from(EXIT_FAILURE)
        }
        Err(e) => {
            let msg = format!("{e:#}");
            eprintln!("error: {msg}");
            if msg.contains("config schema error") || msg.contains("reading config") {
                ExitCode::from(EXIT_BAD_CONFIG)
            } else {
                ExitCode::from(EXIT_FAILURE)
            }
        }
    }
}

fn execute(cli: &Cli) -> Result<bool> {
    match &cli.cmd {
        Command::Recipes => {
            for name in recipes::RECIPE_NAMES {
                println!("{name}");
            }
            Ok(true)
        }
        Command::Recipe { name } => {
            let mut config = recipes::recipe(name)
                .ok_or_else(|| anyhow!("unknown recipe `{name}`; run `cml recipes`"))?;
            apply_overrides(&mut config, cli);
            run_one(&config, name, cli)
        }
        cmd => {
            let (kind, arg) = cmd.kind().expect("config-driven command");
            let text = std::fs::read_to_string(&arg.config)
                .with_context(|| format!("reading config {}", arg.config.display()))?;
            let mut config = ExperimentConfig::from_json(&text)?;
            if config.kind != kind {
                return Err(anyhow!(
                    "config schema error at `kind`: subcommand `{kind}` got a config of kind `{}`",
                    config.kind
                ));
            }
            apply_overrides(&mut config, cli);
            run_one(&config, kind, cli)
        }
    }
}

fn run_one(config: &ExperimentConfig, label: &str, cli: &Cli) -> Result<bool> {
    let out_dir = cli
        .out
        .clone()
        .or_else(|| config.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let outcome = runner::run_experiment(config, &out_dir, label)?;
    for artifact in &outcome.artifacts {
        println!("{}", artifact.display());
    }
    Ok(outcome.passed)
}
