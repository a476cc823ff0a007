//! `biped`: train, evaluate, and analyze the sagittal biped.

mod analyze;
mod evaluate;
mod plot;
mod run_dir;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use biped_core::models::ModelKind;

/// Default root for run directories when `--out` is not given.
pub const OUT_ENV: &str = "BIPED_RUNS";

#[derive(Parser)]
#[command(name = "biped", version, about = "Sagittal biped simulator, learner and gait analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random warmup followed by model-based learning.
    Train(TrainArgs),
    /// Frozen-policy episodes from a checkpoint.
    Rollout(RolloutArgs),
    /// Frozen-policy episodes on inclined ground.
    EvalSlope(SlopeArgs),
    /// Gait, energy, limit-cycle and embedding tables for a run directory.
    Analyze(AnalyzeArgs),
    /// SVG figures from the CSV files of a run directory.
    Plot(PlotArgs),
    /// Print the default configuration as TOML.
    Config(ConfigArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Passive,
    Torque,
}

impl From<Model> for ModelKind {
    fn from(m: Model) -> Self {
        match m {
            Model::Passive => ModelKind::Passive,
            Model::Torque => ModelKind::Torque,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// Model, planner and training budgets from the design defaults.
    Full,
    /// Smaller ensemble and search budget that trains in tens of minutes.
    Desk,
}

#[derive(Args)]
struct OutArgs {
    /// Output directory (default: `$BIPED_RUNS/<name>` or `runs/<name>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace an existing output directory.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_enum)]
    model: Option<Model>,
    /// Target forward speed, m/s.
    #[arg(long)]
    vd: Option<f64>,
    /// Planner episodes after the warmup.
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Write the trajectory of every k-th planner episode (the last is always written).
    #[arg(long, default_value_t = 10)]
    log_every: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct RolloutArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, default_value_t = 1)]
    episodes: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SlopeArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Slope angles in degrees; positive ascends.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-5,-3,3")]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    Gait,
    Energy,
    Poincare,
    Embedding,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "gait,energy,poincare,embedding")]
    metrics: Vec<Metric>,
    /// Contact debounce window, s.
    #[arg(long, default_value_t = biped_core::analysis::DEFAULT_DEBOUNCE)]
    debounce: f64,
    /// Delay-embedding window, control steps.
    #[arg(long, default_value_t = biped_core::analysis::DEFAULT_WINDOW)]
    window: usize,
    #[arg(long, default_value_t = 1)]
    stride: usize,
    #[arg(long)]
    force: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Figure {
    Curve,
    Slope,
    Joints,
    Footprint,
    Embedding,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "curve,slope,joints,footprint,embedding")]
    figures: Vec<Figure>,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long, value_enum, default_value = "passive")]
    model: Model,
    #[arg(long, default_value_t = 1.5)]
    vd: f64,
    /// Include every robot parameter.
    #[arg(long)]
    full: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let result = match cli.command {
        Command::Train(a) => train::run(a, args),
        Command::Rollout(a) => evaluate::rollout(a, args),
        Command::EvalSlope(a) => evaluate::slope(a, args),
        Command::Analyze(a) => analyze::run(a, args),
        Command::Plot(a) => plot::run(a),
        Command::Config(a) => {
            let mut cfg = biped_core::io::RunConfig::new(a.model.into(), a.vd);
            if a.full {
                cfg = cfg.with_bundle();
            }
            cfg.to_toml().map(|t| print!("{t}")).map_err(Into::into)
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
