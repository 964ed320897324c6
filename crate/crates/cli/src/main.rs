use std::process::ExitCode;

use clap::Parser;
use sigtree_cli::config::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match sigtree_cli::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
