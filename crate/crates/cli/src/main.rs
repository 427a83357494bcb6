//! `dlqr`: distributed LQ gain synthesis, cost certification and
//! consensus simulation for networks of identical linear agents.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dlqr_core::synthesis::Method;
use dlqr_core::Tolerances;

use crate::config::{load_problem, Overrides};
use crate::error::{CliError, CliResult};

/// Environment variable holding tolerance overrides, e.g. `care=1e-7,strict=1e-10`.
const TOLERANCE_ENV: &str = "DLQR_TOLERANCES";

#[derive(Debug, Parser)]
#[command(name = "dlqr", version, about = "Distributed LQ gain synthesis and cost certification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Design P and K and check admissibility of x0 against gamma.
    Synthesize {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Write the design to this gain file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact modal cost of a gain and the J < gamma verdict.
    Analyze {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Gain file from `synthesize --out`; defaults to the config's
        /// `[gain]` table, then to a fresh design.
        #[arg(long)]
        gain: Option<PathBuf>,
        /// Write the certificate to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the closed loop and write the trajectory as CSV.
    Simulate {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        gain: Option<PathBuf>,
        #[arg(long, default_value = "trajectory.csv")]
        out: PathBuf,
    },
    /// Run the built-in eight-oscillator example.
    Demo {
        /// Directory for the two trajectory CSVs.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct ProblemArgs {
    /// Problem file (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
}

impl ProblemArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            method: self.method,
            c: self.c,
            epsilon: self.epsilon,
            gamma: self.gamma,
            dt: self.dt,
            horizon: self.horizon,
        }
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: dlqr_core::Error| e.to_string())
}

fn tolerances() -> CliResult<Tolerances> {
    match std::env::var(TOLERANCE_ENV) {
        Ok(spec) => Tolerances::default()
            .with_overrides(&spec)
            .map_err(|e| CliError::validation(format!("{TOLERANCE_ENV}: {e}"))),
        Err(_) => Ok(Tolerances::default()),
    }
}

fn run(cli: Cli) -> CliResult<u8> {
    let tol = tolerances()?;
    match cli.command {
        Command::Synthesize { problem, out } => {
            let p = load_problem(&problem.config, &problem.overrides(), &tol)?;
            commands::synthesize(&p, out.as_deref(), &tol)
        }
        Command::Analyze { problem, gain, out } => {
            let p = load_problem(&problem.config, &problem.overrides(), &tol)?;
            commands::analyze(&p, gain.as_deref(), out.as_deref(), &tol)
        }
        Command::Simulate { problem, gain, out } => {
            let p = load_problem(&problem.config, &problem.overrides(), &tol)?;
            commands::simulate_cmd(&p, gain.as_deref(), &out, &tol)
        }
        Command::Demo { out, dt, horizon } => commands::demo(&out, dt, horizon, &tol),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
