use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cablecal_core::formats::{irb120, read_dataset, RobotConfig};
use cablecal_core::pipeline::{CalibrationConfig, Method};
use cablecal_core::sim::NoiseKind;

mod commands;
mod manifest;

#[derive(Parser)]
#[command(
    name = "cablecal",
    version,
    about = "Kinematic calibration from draw-wire cable-length measurements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic measurement campaign with known ground truth.
    Simulate(SimulateArgs),
    /// Identify DH deviations from a measurement dataset.
    Calibrate(CalibrateArgs),
    /// Run several methods over repeated simulated campaigns.
    Compare(CompareArgs),
    /// Print the flange pose and predicted cable length for one configuration.
    Fk(FkArgs),
}

#[derive(Args)]
struct RobotArg {
    /// Robot config TOML; defaults to the bundled ABB IRB 120 model.
    #[arg(long, value_name = "PATH")]
    robot: Option<PathBuf>,
}

impl RobotArg {
    fn load(&self) -> Result<RobotConfig> {
        match &self.robot {
            Some(path) => RobotConfig::load(path)
                .with_context(|| format!("loading robot config {}", path.display())),
            None => Ok(irb120()),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    robot: RobotArg,
    /// Number of measurement samples.
    #[arg(long, default_value_t = 120, value_parser = clap::value_parser!(u32).range(1..))]
    n: u32,
    /// Noise model: none, gaussian:SIGMA, uniform:HALF_WIDTH or mixture:SIGMA,P,SCALE (mm).
    #[arg(long, default_value = "gaussian:0.1")]
    noise: NoiseKind,
    /// Cap on the injected length deviations (mm).
    #[arg(long, default_value_t = 1.0)]
    max_length: f64,
    /// Cap on the injected angle deviations (rad).
    #[arg(long, default_value_t = 0.01)]
    max_angle: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct TuningArgs {
    /// Calibration settings TOML; omitted keys keep their defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Fraction of samples used for identification.
    #[arg(long)]
    split: Option<f64>,
    /// Iteration budget of the beetle searches.
    #[arg(long)]
    max_iters: Option<usize>,
}

impl TuningArgs {
    fn resolve(&self) -> Result<CalibrationConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => CalibrationConfig::default(),
        };
        if let Some(split) = self.split {
            cfg.train_fraction.0 = split;
        }
        if let Some(n) = self.max_iters {
            cfg.search.max_iters = n;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    robot: RobotArg,
    /// Dataset CSV with columns q1..q6,y_mm.
    #[arg(long, value_name = "PATH")]
    data: PathBuf,
    /// One of ekf, bas, qibas, ekf-qibas.
    #[arg(long)]
    method: Method,
    #[command(flatten)]
    tuning: TuningArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    robot: RobotArg,
    /// Scenario TOML; defaults to 120 samples with gaussian:0.1 noise.
    #[arg(long, value_name = "PATH")]
    scenario: Option<PathBuf>,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', default_value = "ekf,bas,qibas,ekf-qibas")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..))]
    trials: u32,
    #[command(flatten)]
    tuning: TuningArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct FkArgs {
    #[command(flatten)]
    robot: RobotArg,
    /// Anchor point `x,y,z` (mm); defaults to the robot config's anchor.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    p0: Option<Vec<f64>>,
    /// The six joint angles (rad).
    #[arg(num_args = 6, required = true, value_name = "Q")]
    q: Vec<f64>,
}

fn load_dataset(path: &Path, robot: &RobotConfig) -> Result<cablecal_core::Dataset> {
    let data = read_dataset(path, robot.p0)?;
    data.check_limits(&robot.table).with_context(|| {
        format!(
            "checking {} against the robot's joint limits",
            path.display()
        )
    })?;
    Ok(data)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Calibrate(a) => commands::calibrate(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Fk(a) => {
            if let Some(p0) = &a.p0 {
                if p0.len() != 3 {
                    bail!("--p0 needs 3 comma-separated values, got {}", p0.len());
                }
            }
            commands::fk(&a)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
