use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mfst_cli::commands::{cmd_evidence, cmd_infer, cmd_simulate, cmd_solve, format_evidence_table};
use mfst_cli::config::{Overrides, RunConfig};
use mfst_core::Error;

/// Multifidelity sequential tempered MCMC for stochastic reaction networks.
///
/// Every flag can also be set through an environment variable with the
/// MFST_ prefix (MFST_CONFIG, MFST_SEED, MFST_WORKERS, MFST_OUT,
/// MFST_STRATEGY). Flags beat environment variables, which beat the
/// config file. Log verbosity follows RUST_LOG.
#[derive(Parser)]
#[command(name = "mfst", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the CME on a bounding box and write per-time distributions.
    Solve(Common),
    /// Simulate a snapshot dataset with the SSA.
    Simulate(Common),
    /// Run multifidelity ST-MCMC on a dataset.
    Infer(Common),
    /// Compare model classes by their evidence on a shared dataset.
    Evidence(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long, env = "MFST_CONFIG")]
    config: PathBuf,
    /// Master random seed.
    #[arg(long, env = "MFST_SEED")]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this value.
    #[arg(long, env = "MFST_WORKERS")]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, env = "MFST_OUT")]
    out: Option<PathBuf>,
    /// Bridging strategy.
    #[arg(long, env = "MFST_STRATEGY", value_parser = ["full", "ess", "it", "tuned-it"])]
    strategy: Option<String>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            workers: self.workers,
            out: self.out.clone(),
            strategy: self.strategy.clone(),
        }
    }

    fn load(&self) -> mfst_core::Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        cfg.apply(&self.overrides());
        Ok(cfg)
    }
}

fn run(cli: Cli) -> mfst_core::Result<()> {
    match cli.command {
        Command::Solve(c) => {
            let cfg = c.load()?;
            let r = cmd_solve(&cfg)?;
            println!(
                "solved {} time points on {} states; final FSP error {:.3e}; wrote {}",
                r.times.len(),
                r.states_used,
                r.final_fsp_error,
                cfg.out.display()
            );
        }
        Command::Simulate(c) => {
            let cfg = c.load()?;
            let path = cmd_simulate(&cfg)?;
            println!("wrote {}", path.display());
        }
        Command::Infer(c) => {
            let cfg = c.load()?;
            let r = cmd_infer(&cfg)?;
            println!(
                "{} levels; log evidence {:.4} ± {:.4}; {} top-fidelity solves; wrote {}",
                r.levels,
                r.log_evidence.unwrap_or(f64::NAN),
                r.log_evidence_sigma.unwrap_or(f64::NAN),
                r.full_model_solves,
                cfg.out.display()
            );
        }
        Command::Evidence(c) => {
            let cfg = c.load()?;
            let mut child = c.overrides();
            child.out = None;
            let r = cmd_evidence(&cfg, &child)?;
            print!("{}", format_evidence_table(&r));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Model(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
