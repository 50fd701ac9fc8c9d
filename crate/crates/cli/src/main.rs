//! Batch command-line front end: verification batteries, reconstruction
//! runs and flag profiles driven by a single JSON config file.
//!
//! Exit codes are frozen for CI use: 0 all checks passed, 1 configuration
//! error, 2 a check or tolerance failed, 3 a solver or runtime error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Bad config file, unknown model, invalid values: exit 1.
    Config(String),
    /// A verification check failed outside the report flow: exit 2.
    CheckFailed(String),
    /// Solver or I/O failure: exit 3.
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::CheckFailed(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::CheckFailed(m) | CliError::Runtime(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "liesys",
    about = "Verification, reduction and reconstruction for the built-in control systems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification battery for a model and write report.json.
    Verify {
        /// JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Test hook: corrupt a registry field before verifying,
        /// e.g. negate:X3:xi1. Repeatable.
        #[arg(long, hide = true)]
        inject_fault: Vec<String>,
    },
    /// Run the reduce/lift/compose pipeline and write CSV trajectories
    /// plus report.json.
    Reconstruct {
        #[arg(long)]
        config: PathBuf,
    },
    /// Rank profile of the iterated-bracket flag for a trailer model.
    Flag {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the registered models.
    Models,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Verify {
            config,
            inject_fault,
        } => commands::cmd_verify(config, inject_fault),
        Command::Reconstruct { config } => commands::cmd_reconstruct(config),
        Command::Flag { config } => commands::cmd_flag(config),
        Command::Models => commands::cmd_models(),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}
