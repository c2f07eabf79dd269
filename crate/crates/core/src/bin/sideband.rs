use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sideband::scenario::{run_experiment, ExperimentKind, RunOptions, ScenarioConfig};

#[derive(Parser)]
#[command(version, about = "Sideband-separating receiver compensation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate every channel and write the constants.
    Calibrate(Common),
    /// Calibrate, apply the configured drift events and sweep the SRR.
    Sweep(Common),
    /// Random-walk drift against a frozen calibration.
    Stability(Common),
    /// Independent perturbations per reset against a frozen calibration.
    Defluxing(Common),
    /// Systematic-error contours.
    Contours(Common),
    /// Propagated error bars versus analog rejection.
    Errorbars(Common),
    /// Monte Carlo check of the propagated error bars.
    Montecarlo(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Also write two-column plot data.
    #[arg(long)]
    plot_data: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match cli.command {
        Command::Calibrate(c) => (ExperimentKind::Calibrate, c),
        Command::Sweep(c) => (ExperimentKind::SrrSweep, c),
        Command::Stability(c) => (ExperimentKind::Stability, c),
        Command::Defluxing(c) => (ExperimentKind::Defluxing, c),
        Command::Contours(c) => (ExperimentKind::Contours, c),
        Command::Errorbars(c) => (ExperimentKind::ErrorBars, c),
        Command::Montecarlo(c) => (ExperimentKind::MonteCarlo, c),
    };
    let result = ScenarioConfig::load(&common.config).and_then(|cfg| {
        run_experiment(
            &cfg,
            &RunOptions {
                kind: Some(kind),
                seed: common.seed,
                out_dir: common.out_dir,
                plot_data: common.plot_data,
            },
        )
    });
    match result {
        Ok(report) => {
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            println!("wrote {}", report.manifest.display());
            for (k, v) in &report.summary {
                println!("{k} = {v}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
