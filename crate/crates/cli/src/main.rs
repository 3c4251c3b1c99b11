//! `fused-strip`: verification suites, stationary measures, simulations and
//! parameter sweeps for the fused vertex model on a strip.
//!
//! Exit codes: 0 success, 1 a check failed, 2 bad usage or configuration,
//! 3 a computation error.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::Common;

#[derive(Parser, Debug)]
#[command(name = "fused-strip", version, about = "Fused higher-spin stochastic vertex model on a strip")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fusion routes, Yang-Baxter and reflection residuals, stochasticity.
    VerifyFusion,
    /// Stationary measure on a path: Perron vector against the matrix product ansatz.
    Stationary,
    /// Monte Carlo histogram of the one-step chain.
    Simulate,
    /// Askey-Wilson normalization and finite-size identities.
    AwCheck,
    /// Finite-N mean density against its large-N limit.
    DensityScan {
        /// Comma-separated widths.
        #[arg(long = "n-list")]
        n_list: Option<String>,
        /// Comma-separated up-edge fractions.
        #[arg(long = "lambda-list")]
        lambda_list: Option<String>,
    },
    /// Phase and limiting density over an (A, C) grid.
    PhaseDiagram {
        /// `lo:hi:count` or a comma-separated list.
        #[arg(long = "a-grid")]
        a_grid: Option<String>,
        #[arg(long = "c-grid")]
        c_grid: Option<String>,
        #[arg(long)]
        lambda: Option<f64>,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Compute(anyhow::Error),
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let res = cli.common.resolve().map_err(Failure::Usage)?;
    let (name, outcome) = match cli.command {
        Command::VerifyFusion => ("verify-fusion", commands::verify_fusion(&res)),
        Command::Stationary => ("stationary", commands::stationary(&res)),
        Command::Simulate => ("simulate", commands::simulate(&res)),
        Command::AwCheck => ("aw-check", commands::aw_check(&res)),
        Command::DensityScan { n_list, lambda_list } => ("density-scan", commands::density_scan(&res, n_list, lambda_list)),
        Command::PhaseDiagram { a_grid, c_grid, lambda } => {
            ("phase-diagram", commands::phase_diagram(&res, a_grid, c_grid, lambda))
        }
    };
    let outcome = outcome.map_err(|e| {
        let bad_input = matches!(
            e.downcast_ref::<fused_strip::Error>(),
            Some(fused_strip::Error::InvalidParams(_) | fused_strip::Error::OutOfRange(_) | fused_strip::Error::PathOrder(_))
        );
        if bad_input || e.downcast_ref::<config::UsageError>().is_some() {
            Failure::Usage(e)
        } else {
            Failure::Compute(e)
        }
    })?;
    output::emit(name, &res, &outcome.table).map_err(Failure::Compute)?;
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("{}", json!({"error": format!("{e:#}"), "kind": "usage"}));
            ExitCode::from(2)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("{}", json!({"error": format!("{e:#}"), "kind": "computation"}));
            ExitCode::from(3)
        }
    }
}
