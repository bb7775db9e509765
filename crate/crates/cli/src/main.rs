//! Command-line interface for exact price bounds and semi-static hedges on
//! two-period exotic payoffs with discrete marginals.
//!
//! Exit codes: 0 on success, 1 when the inputs are structurally sound but
//! fail a financial check (no martingale coupling, arbitrage in quotes,
//! infeasible hedge, uncertified bound mismatch), 2 on unreadable or
//! malformed inputs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod files;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input: exit code 2.
    Usage(String),
    /// Financially meaningful failure: exit code 1.
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Bound {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Value of the monotone coupling matching the bound.
    Monotone,
    /// Exact simplex solve of the pricing program.
    Lp,
    /// Both, cross-checked against each other.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Pretty,
    Compact,
}

#[derive(Parser)]
#[command(
    name = "mot",
    version,
    about = "Exact price bounds and semi-static hedges for two-period exotic \
             payoffs with discrete marginals"
)]
struct Cli {
    /// JSON layout of the report printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Pretty)]
    output: OutputFormat,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check whether the marginals admit any martingale coupling.
    CheckOrder {
        /// Instance file (payoff is parsed but not used).
        #[arg(long)]
        instance: PathBuf,
    },
    /// Compute a price bound.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        bound: Bound,
        #[arg(long, value_enum, default_value_t = Method::Monotone)]
        method: Method,
        /// Re-verify the construction's invariants after every step (slow).
        #[arg(long)]
        debug_invariants: bool,
    },
    /// Build the semi-static portfolio certifying a price bound.
    Hedge {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        bound: Bound,
    },
    /// Extract marginals from call quotes and check the surface for
    /// calendar arbitrage.
    Extract {
        #[arg(long)]
        quotes: PathBuf,
    },
    /// Re-check a stored coupling and/or hedge portfolio against an
    /// instance.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        hedge: Option<PathBuf>,
        /// Side the hedge is checked against.
        #[arg(long, value_enum, default_value_t = Bound::Upper)]
        bound: Bound,
    },
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let format = cli.output;
    match cli.command {
        Command::CheckOrder { instance } => commands::cmd_check_order(&instance, format),
        Command::Solve {
            instance,
            bound,
            method,
            debug_invariants,
        } => commands::cmd_solve(&instance, bound, method, debug_invariants, format),
        Command::Hedge { instance, bound } => commands::cmd_hedge(&instance, bound, format),
        Command::Extract { quotes } => commands::cmd_extract(&quotes, format),
        Command::Verify {
            instance,
            plan,
            hedge,
            bound,
        } => commands::cmd_verify(
            &instance,
            plan.as_deref(),
            hedge.as_deref(),
            bound,
            format,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
