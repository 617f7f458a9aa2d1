use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use morozov::config::ExperimentConfig;
use morozov::experiment::{generate_problems, run_curve, run_experiment};

#[derive(Parser)]
#[command(version, about = "Discrepancy-principle regularization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured solver over all repetitions.
    Run { config: PathBuf },
    /// Sample the residual norm of the Tikhonov solution over a grid of α.
    Curve { config: PathBuf },
    /// Write the generated problem instances to disk.
    Gen { config: PathBuf },
}

fn execute(cli: Cli) -> morozov::Result<ExitCode> {
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let summary = run_experiment(&cfg)?;
            for row in &summary.rows {
                let fmt =
                    |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4e}"));
                println!(
                    "{:<16} runs={} failures={} converged={} mean_iters={} mean_alpha={} mean_rel_error={}",
                    row.solver,
                    row.runs,
                    row.failures,
                    row.converged,
                    row.mean_iters.map_or_else(|| "-".into(), |v| format!("{v:.1}")),
                    fmt(row.mean_alpha),
                    fmt(row.mean_rel_error),
                );
            }
            for run in &summary.runs {
                if let Err(e) = &run.result {
                    eprintln!("{} seed {}: {e}", run.solver, run.seed);
                }
            }
            println!(
                "results in {}",
                cfg.resolve(&cfg.experiment.output).display()
            );
            Ok(if summary.failures() > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Curve { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let (path, points) = run_curve(&cfg)?;
            println!("{} points written to {}", points.len(), path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Gen { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            for dir in generate_problems(&cfg)? {
                println!("{}", dir.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
