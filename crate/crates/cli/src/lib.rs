//! Experiment runner behind the `sigtree` binary.

pub mod commands;
pub mod config;
pub mod format;

use anyhow::Result;

use config::{Cli, Command};

/// Runs one parsed invocation; `Ok(false)` means a verification failed.
pub fn run(cli: &Cli) -> Result<bool> {
    let settings = cli.command.flags().resolve()?;
    match &cli.command {
        Command::Codebook(_) => commands::cmd_codebook(&settings),
        Command::Verify(_) => commands::cmd_verify(&settings),
        Command::Simulate(_) => commands::cmd_simulate(&settings),
        Command::Slots(_) => commands::cmd_slots(&settings),
        Command::Figures(_) => commands::cmd_figures(&settings),
    }
}
