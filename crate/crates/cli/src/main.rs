mod cli;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use cli::Cli;
use config::Usage;

fn main() -> ExitCode {
    let args = Cli::parse();
    match commands::run(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("xlda: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
