use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracspde_cli::{run_file, sweep, Axis, CliError, Experiment, ExperimentConfig};

/// Experiment runner for fractional stochastic PDE solvers and inequality checks.
#[derive(Parser)]
#[command(name = "fracspde", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Rerun with one parameter scaled by each factor and aggregate the reports.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated multipliers, e.g. `1,0.5,0.25`.
        #[arg(long, value_delimiter = ',', required = true)]
        factors: Vec<f64>,
        /// Fail a report if its ratio drifts by more than this between levels.
        #[arg(long)]
        max_drift: Option<f64>,
    },
    /// List the available experiment kinds.
    ListExperiments,
}

fn print_report(name: &str, ratio: f64, pass: bool, series: Option<&Vec<f64>>) {
    let status = if pass { "PASS" } else { "FAIL" };
    match series {
        Some(s) if s.len() > 1 => println!("{status} {name}: ratio {ratio:.6e} series {s:?}"),
        _ => println!("{status} {name}: ratio {ratio:.6e}"),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListExperiments => {
            for e in Experiment::ALL {
                println!("{:<17} {}", e.name(), e.description());
            }
            ExitCode::SUCCESS
        }
        Command::Run { config } => match run_file(&config) {
            Ok(outcome) => {
                for r in &outcome.reports {
                    print_report(&r.name, r.ratio, r.pass, r.refinement_series.as_ref());
                }
                println!("manifest: {}", outcome.manifest_path.display());
                ExitCode::from(outcome.exit_code() as u8)
            }
            Err(e) => fail(e),
        },
        Command::Sweep { config, axis, factors, max_drift } => {
            let result = ExperimentConfig::load(&config).and_then(|c| sweep(&c, axis, &factors, max_drift));
            match result {
                Ok(outcome) => {
                    for r in &outcome.reports {
                        print_report(&r.name, r.ratio, r.pass, r.refinement_series.as_ref());
                    }
                    for f in &outcome.fits {
                        if let Some(s) = f.lhs_slope {
                            println!("fit {}: d ln(lhs)/d ln({}) = {s:.4}", f.name, axis.name());
                        }
                        if let Some(s) = f.std_error_slope {
                            println!("fit {}: d ln(std error)/d ln({}) = {s:.4}", f.name, axis.name());
                        }
                    }
                    println!("manifest: {}", outcome.manifest_path.display());
                    ExitCode::from(outcome.exit_code() as u8)
                }
                Err(e) => fail(e),
            }
        }
    }
}
