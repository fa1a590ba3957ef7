use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use artibot::harness::{self, MetricsReport, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "artibot", version, about = "Distributed actor-critic training for snake and hexapod robots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the root seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the worker count of the config.
    #[arg(long)]
    workers: Option<usize>,
    /// Single-stream scheduling for bit-exact reruns.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Record compliant-controller trials into the replay database.
    GenerateDb(Common),
    /// Offline training of the snake shape policy.
    TrainSnake(Common),
    /// Online training of the per-leg hexapod policy.
    TrainHexapod(Common),
    /// Online training of the single 729-action hexapod policy.
    TrainHexapodCentralized(Common),
    /// Gait cycles per meter of the learned snake policy.
    EvalSnake(Common),
    /// Static stabilization of the learned hexapod policy.
    EvalHexapod {
        #[command(flatten)]
        common: Common,
        /// Remove the middle legs before evaluating.
        #[arg(long)]
        quadruped: bool,
    },
    /// Learned snake policy against the compliant baseline on paired worlds.
    Compare(Common),
}

const EXIT_CONFIG: u8 = 2;
const EXIT_MISSING: u8 = 3;
const EXIT_FAULT: u8 = 4;

fn load(common: &Common) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    cfg.deterministic |= common.deterministic;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<MetricsReport> {
    let report = match &cli.command {
        Command::GenerateDb(c) => harness::generate_db(&load(c)?)?,
        Command::TrainSnake(c) => harness::train_snake(&load(c)?)?,
        Command::TrainHexapod(c) => harness::train_hexapod(&load(c)?, false)?,
        Command::TrainHexapodCentralized(c) => harness::train_hexapod(&load(c)?, true)?,
        Command::EvalSnake(c) => harness::eval_snake(&load(c)?)?,
        Command::EvalHexapod { common, quadruped } => harness::eval_hexapod(&load(common)?, *quadruped)?,
        Command::Compare(c) => harness::compare(&load(c)?)?,
    };
    Ok(report)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<artibot::Error>() {
        Some(artibot::Error::Config(_)) => EXIT_CONFIG,
        Some(artibot::Error::MissingArtifact(_)) => EXIT_MISSING,
        Some(artibot::Error::EnvironmentFault(_) | artibot::Error::WorldGeneration(_)) => EXIT_FAULT,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli).and_then(|r| serde_json::to_string(&r.metrics).context("serializing metrics")) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
