mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use proxpda::Variant;

use commands::Status;
use config::{Loaded, Overrides};

/// Proximal primal-dual experiments: parameter reports, solver runs, graphs
/// and distributed matrix factorization.
///
/// Exit codes: 0 success, 1 tolerance not reached, 2 invalid input.
/// Set PROXPDA_LOG (e.g. `info`, `debug`) for log output.
#[derive(Debug, Parser)]
#[command(name = "proxpda", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for traces and reports.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for graph generation and random initialization.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, global = true, value_name = "N")]
    max_iters: Option<usize>,
    /// Stop once the optimality gap Q is at most this value.
    #[arg(long, global = true, value_name = "FLOAT")]
    phi: Option<f64>,
    /// prox_pda, prox_gpda, in_prox_pda, prox_pda_ip or prox_gpda_ip.
    #[arg(long, global = true, value_name = "NAME")]
    variant: Option<Variant>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report spectral constants and parameter bounds.
    Params,
    /// Run the configured solver and write a trace and summary.
    Solve,
    /// Write an edge list: path(n), cycle(n), complete(n), erdos_renyi(n, p).
    Graph { spec: String },
    /// Run distributed matrix factorization.
    Mf,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            max_iters: self.max_iters,
            phi: self.phi,
            variant: self.variant,
        }
    }

    fn load(&self) -> Result<Loaded> {
        let path = self.config.as_ref().context("--config PATH is required")?;
        Loaded::read(path, &self.overrides())
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

fn run(cli: &Cli) -> Result<Status> {
    let c = &cli.common;
    match &cli.command {
        Command::Params => commands::params(&c.load()?, &c.out_dir()),
        Command::Solve => commands::solve(&c.load()?, &c.out_dir()),
        Command::Mf => commands::mf(&c.load()?, &c.out_dir()),
        Command::Graph { spec } => commands::graph(spec, c.seed.unwrap_or(0), c.out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PROXPDA_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::NotConverged) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
