mod config;
mod presets;
mod runner;

use clap::Parser;
use std::path::PathBuf;

/// Experiment runner for the slow-fast delayed population laboratory.
#[derive(Debug, Parser)]
#[command(name = "pulselab", version, about)]
struct Cli {
    /// Path to a JSON experiment configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Name of a built-in preset (see `--preset list`).
    #[arg(long)]
    preset: Option<String>,

    /// Output directory (overridden by PULSELAB_OUT if set).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads for parallel stages.
    #[arg(long)]
    workers: Option<usize>,

    /// Also write gnuplot scripts next to the CSV outputs.
    #[arg(long)]
    emit_plots: bool,
}

fn main() {
    let cli = Cli::parse();
    let code = match runner::execute(runner::Invocation {
        config: cli.config,
        preset: cli.preset,
        out: cli.out,
        workers: cli.workers,
        emit_plots: cli.emit_plots,
    }) {
        Ok(()) => 0,
        Err(runner::AppError::Validation(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(runner::AppError::Run(err)) => {
            eprintln!("error: {err:#}");
            3
        }
    };
    std::process::exit(code);
}
