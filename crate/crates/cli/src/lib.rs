//! Command-line front end: CSV ingestion, balance and dose-response runs on
//! user data, and Monte-Carlo scenario runs.

pub mod args;
pub mod commands;
pub mod error;
pub mod io;

use args::{Cli, Command};

/// Runs one parsed invocation and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Balance(a) => commands::cmd_balance(a),
        Command::Drf(a) => commands::cmd_drf(a),
        Command::Simulate(a) => commands::cmd_simulate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
