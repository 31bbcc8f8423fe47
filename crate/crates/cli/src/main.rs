mod commands;
mod failure;
mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "mfdc", version, about = "Throughput model, optimizer and simulator for multichannel full-duplex cognitive MAC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Network throughput at the configured sensing time, power and selection probabilities.
    Evaluate(Common),
    /// Optimize sensing parameters and channel-selection probabilities.
    Optimize(Common),
    /// Monte Carlo simulation at the configured operating point.
    Simulate(SimulateArgs),
    /// Evaluate along one or two scenario keys and write a CSV surface.
    Sweep(SweepArgs),
    /// Optimized design against the equal-probability and fixed-assignment baselines.
    Compare(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,

    /// Output directory for CSV files.
    #[arg(long, env = "MFDC_OUT_DIR", default_value = "mfdc-out")]
    out: PathBuf,

    /// Simulation seed, overriding `sim.seed`.
    #[arg(long)]
    seed: Option<u64>,

    /// Override a scenario key, e.g. `--set si.zeta=0.4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,

    /// Write the event trace as JSON lines to this file.
    #[arg(long)]
    trace: Option<PathBuf>,

    /// Maximum number of trace events kept.
    #[arg(long, default_value_t = 100_000)]
    trace_limit: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepMode {
    Evaluate,
    Optimize,
    Compare,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,

    /// Swept key as `KEY=START:STOP:STEPS`; give twice for a surface.
    #[arg(long, required = true)]
    axis: Vec<String>,

    /// What to compute at every point.
    #[arg(long, value_enum, default_value_t = SweepMode::Evaluate)]
    mode: SweepMode,

    /// Attach a simulated throughput and its CI to every point.
    #[arg(long)]
    with_sim: bool,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Evaluate(c) => commands::evaluate(&c),
        Command::Optimize(c) => commands::optimize(&c),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Sweep(a) => sweep::run(&a),
        Command::Compare(c) => commands::compare(&c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
