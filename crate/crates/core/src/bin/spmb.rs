//! Command-line entry point.
//!
//! Exit codes: 0 pass, 1 check failure, 2 usage error, 3 numeric budget exhausted.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spmb::cli::{self, Outcome, RunConfig};
use spmb::Error;

#[derive(Parser)]
#[command(name = "spmb", version, about = "Multi-bump solutions of a Schrödinger-Poisson system")]
struct Args {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Evaluation budget of every quadrature.
    #[arg(long, global = true)]
    budget: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the ground state and write the profile file.
    GroundState,
    /// Reduced-energy constants and the interaction prefactor.
    Constants,
    /// Interaction integral samples and the fitted decay law.
    Interaction,
    /// Reduced energy over the radius window of one k.
    Landscape {
        #[arg(long)]
        k: Option<usize>,
    },
    /// Optimal radius, and the corrector, for every k of the sweep list.
    OptimumSweep,
    /// Residual surrogate at the central radius for every k of the residual list.
    ResidualSweep,
    /// Corrector at one configuration.
    Correct {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        r: Option<f64>,
    },
    /// Full verification suite.
    Verify,
}

fn run(args: &Args, config: &RunConfig) -> spmb::Result<Outcome> {
    match &args.command {
        Command::GroundState => cli::run_ground_state(config),
        Command::Constants => cli::run_constants(config),
        Command::Interaction => cli::run_interaction(config),
        Command::Landscape { k } => cli::run_landscape(config, k.unwrap_or(config.landscape_k)),
        Command::OptimumSweep => cli::run_sweep(config),
        Command::ResidualSweep => cli::run_residual_sweep(config),
        Command::Correct { k, r } => cli::run_correct(config, k.unwrap_or(config.correct_k), *r),
        Command::Verify => cli::run_verify(config),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    if let Some(jobs) = args.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let config = match cli::parse_config(args.config.as_deref()) {
        Ok(mut c) => {
            if let Some(out) = &args.out {
                c.out_dir = out.clone();
            }
            if let Some(budget) = args.budget {
                c = c.with_budget(budget);
            }
            c
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&args, &config) {
        Ok(outcome) => {
            println!("{}", serde_json::to_string_pretty(&outcome).unwrap_or_default());
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                e if e.is_budget() => 3,
                Error::ConfigInvalid(_) | Error::InvalidParameter { .. } => 2,
                _ => 1,
            })
        }
    }
}
