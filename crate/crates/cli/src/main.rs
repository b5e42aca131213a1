use std::path::PathBuf;
use std::process::ExitCode;

use bbmlab::commands::{self, Command};
use bbmlab::config::{ExperimentConfig, Overrides, Resolved};
use bbmlab::{CliError, CliResult};
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "bbmlab", version, about = "Branching Brownian motion with selection: simulations and checks")]
struct Cli {
    /// Experiment file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    replicas: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; falls back to the config, then BBMLAB_WORKERS, then the core count.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Theta function, both series, on random points.
    NumericsCheck,
    /// Absorbed counts on the critical line, the traveling wave and the W statistics.
    CriticalLine,
    /// Single-excursion breakout probability.
    BreakoutRate,
    /// Epochs of the moving barrier and the rescaled path.
    BarrierPath,
    /// Front of BBM with selection.
    Nbbm,
    /// Paths of the limiting Lévy process.
    Levy,
    /// Runs a named acceptance suite; exits 1 if any criterion fails.
    Verify { suite: String },
}

fn run(cli: Cli) -> CliResult<i32> {
    let file = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let command = match cli.command {
        Some(Cmd::NumericsCheck) => Command::NumericsCheck,
        Some(Cmd::CriticalLine) => Command::CriticalLine,
        Some(Cmd::BreakoutRate) => Command::BreakoutRate,
        Some(Cmd::BarrierPath) => Command::BarrierPath,
        Some(Cmd::Nbbm) => Command::Nbbm,
        Some(Cmd::Levy) => Command::Levy,
        Some(Cmd::Verify { suite }) => Command::Verify(suite),
        None => match &file.command {
            Some(c) => c.parse()?,
            None => return Err(CliError::Config("no command given on the command line or in the config".into())),
        },
    };
    let ov = Overrides { seed: cli.seed, replicas: cli.replicas, workers: cli.workers, out: cli.out };
    let cfg = Resolved::new(file, &ov)?;
    let code = commands::run(&command, &cfg)?;
    println!("{} -> {}", command.name(), cfg.output_dir.display());
    if let Command::Verify(_) = command {
        if let Ok(text) = std::fs::read_to_string(cfg.output_dir.join("verify.csv")) {
            for line in text.lines().skip(2) {
                println!("{line}");
            }
        }
    }
    Ok(code)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
