//! `mmshare`: runs simulations, externality sweeps, demand analysis and the
//! duopoly sweep from presets or TOML configs.

mod cache;
mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Exit statuses.
pub mod exit {
    pub const VALIDATION: u8 = 2;
    pub const INFEASIBLE: u8 = 3;
    pub const IO: u8 = 4;
}

#[derive(Debug, Parser)]
#[command(name = "mmshare", version, about = "mmWave sharing simulator and network-goods economics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-UE rate distributions for each sharing regime.
    Simulate(Common),
    /// Fifth-percentile rate versus network size, normalized to h(n).
    Externality {
        #[command(flatten)]
        common: Common,
        /// Comma-separated network sizes in (0, 1].
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Fulfilled-expectations demand, critical mass and equilibria.
    Demand {
        #[command(flatten)]
        common: Common,
        /// Use h(n) = n instead of simulated curves.
        #[arg(long, conflicts_with = "curve")]
        analytic: bool,
        /// Curve CSV written by `externality`.
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        omega_hat: Option<f64>,
        /// Marginal cost; repeat or comma-separate for several.
        #[arg(long = "cost", value_delimiter = ',', allow_negative_numbers = true)]
        costs: Option<Vec<f64>>,
    },
    /// Duopoly equilibria over a grid of type scales and network intensities.
    Duopoly {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        q_hat: Option<f64>,
        /// Network intensity; repeat or comma-separate for several.
        #[arg(long = "mu", value_delimiter = ',', allow_negative_numbers = true)]
        mu: Option<Vec<f64>>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// TOML config file (alternative to --preset).
    #[arg(conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Shipped preset name.
    #[arg(long)]
    preset: Option<String>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

/// A failure with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<mmshare::Error> for Failure {
    fn from(e: mmshare::Error) -> Self {
        use mmshare::Error::*;
        let code = match &e {
            Infeasible(_) | Singular(_) => exit::INFEASIBLE,
            Io(_) => exit::IO,
            Parameter { .. } | Geometry(_) | Validation(_) | Empty(_) | Parse(_) => exit::VALIDATION,
        };
        Failure::new(code, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(common) => commands::simulate(&common.into()),
        Command::Externality { common, grid } => commands::externality(&common.into(), grid),
        Command::Demand {
            common,
            analytic,
            curve,
            omega_hat,
            costs,
        } => commands::demand(
            &common.into(),
            commands::DemandOverrides {
                analytic,
                curve,
                omega_hat,
                costs,
            },
        ),
        Command::Duopoly { common, q_hat, mu } => commands::duopoly(&common.into(), q_hat, mu),
    };
    match result {
        Ok(written) => {
            for path in written {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

impl From<Common> for commands::Options {
    fn from(c: Common) -> Self {
        commands::Options {
            config: c.config,
            preset: c.preset,
            seed: c.seed,
            out_dir: c.out_dir,
            threads: c.threads,
        }
    }
}
