//! `ris-unfold` command-line driver.

mod config;
mod dispatch;
mod run;

use std::process::ExitCode;

use clap::Parser;

use run::{Cli, CliError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { CliError::USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = run::parse_and_validate(cli).and_then(|rc| dispatch::dispatch(&rc));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
