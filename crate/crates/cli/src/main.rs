//! `tpbn`: fit, simulate, benchmark and calibrate three-parameter beta normal
//! regression models.

mod commands;
mod config;
mod error;
mod io;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Outputs;
use config::{BenchmarkArgs, CalibrateArgs, FitArgs, ReplayArgs, RunConfig, SimulateArgs};
use error::CliResult;
use tpbn::par::Execution;

#[derive(Debug, Parser)]
#[command(name = "tpbn", version, about = "Sparse Bayesian regression with three-parameter beta normal priors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model to a CSV dataset by Gibbs sampling, variational Bayes or MAP
    Fit(FitArgs),
    /// Generate simulated regression datasets
    Simulate(SimulateArgs),
    /// Compare methods by relative model error against cross-validated lasso
    Benchmark(BenchmarkArgs),
    /// Find phi with P(rho > threshold) = target
    CalibratePhi(CalibrateArgs),
    /// Re-run the configuration embedded in an artifact
    Replay(ReplayArgs),
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Fit(args) => {
            let cfg = args.resolve()?;
            let out = Outputs { file: args.output, chain: args.chain_out, ..Default::default() };
            commands::run(&RunConfig::Fit(cfg), &out)
        }
        Command::Simulate(args) => {
            let out = Outputs { dir: Some(args.out_dir.clone()), ..Default::default() };
            commands::run(&RunConfig::Simulate(args.resolve()?), &out)
        }
        Command::Benchmark(args) => {
            let out = Outputs { dir: Some(args.out.clone()), execution: execution(args.sequential), ..Default::default() };
            commands::run(&RunConfig::Benchmark(args.resolve()?), &out)
        }
        Command::CalibratePhi(args) => commands::run(&RunConfig::CalibratePhi(args.resolve()), &Outputs::default()),
        Command::Replay(args) => {
            let cfg = commands::load_config(&args.artifact)?;
            let out = match cfg {
                RunConfig::Fit(_) | RunConfig::CalibratePhi(_) => Outputs { file: args.to, ..Default::default() },
                _ => {
                    let dir = args.to.ok_or_else(|| {
                        error::CliError::Usage("replay of simulate or benchmark needs --to DIR".into())
                    })?;
                    Outputs { dir: Some(dir), execution: execution(args.sequential), ..Default::default() }
                }
            };
            commands::run(&cfg, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tpbn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
