mod commands;
mod report;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Simulate the 1+1 defocusing wave equation and audit its decay estimates.
#[derive(Parser)]
#[command(name = "decaylab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration and write diagnostics, traces and snapshots.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `output.dir` or `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue from the latest snapshot in the output directory.
        #[arg(long)]
        resume: bool,
        /// Also run the same configuration at dx/2 into `<out>/refined`.
        #[arg(long)]
        dx_refine: bool,
    },
    /// Replay a finished run with multiplier flux audits and identity checks.
    Audit {
        /// Run directory written by `simulate`.
        #[arg(long)]
        out: PathBuf,
        /// Audit items (and identity window) from this file instead of the run's.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Restrict to these multipliers (time, scaling, boost, morawetz, interior).
        #[arg(long = "multiplier")]
        multipliers: Vec<String>,
        /// Compare against a fresh replay at dx/2.
        #[arg(long)]
        dx_refine: bool,
    },
    /// Fit decay rates from a run's diagnostics.
    Rates {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every combination of the `[sweep]` lists and aggregate the results.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dx_refine: bool,
    },
    /// Print a readable summary of a run directory.
    Report {
        #[arg(long)]
        out: PathBuf,
        /// Write plot-ready CSVs to `<out>/plots`.
        #[arg(long)]
        plots: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            config,
            out,
            resume,
            dx_refine,
        } => commands::simulate(&config, out.as_deref(), resume, dx_refine),
        Command::Audit {
            out,
            config,
            multipliers,
            dx_refine,
        } => commands::audit(&out, config.as_deref(), &multipliers, dx_refine),
        Command::Rates { out } => commands::rates(&out),
        Command::Sweep {
            config,
            out,
            dx_refine,
        } => sweep::sweep(&config, out.as_deref(), dx_refine),
        Command::Report { out, plots } => report::report(&out, plots),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
