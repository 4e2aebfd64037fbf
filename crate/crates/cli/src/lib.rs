//! The `opo` command-line tool.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod rows;

use std::ffi::OsString;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;
use output::{unix_now, RunContext};

fn dispatch(cli: &Cli, argv: Vec<String>) -> Result<(), CliError> {
    let ctx = |command| RunContext {
        command,
        argv: argv.clone(),
        started: unix_now(),
    };
    match &cli.command {
        Command::Bifurcation(a) => commands::bifurcation(&ctx("bifurcation"), a),
        Command::Spectra(a) => commands::spectra(&ctx("spectra"), a),
        Command::Entanglement(a) => commands::entanglement(&ctx("entanglement"), a),
        Command::Oracle(a) => commands::oracle(&ctx("oracle"), a),
        Command::Validate(a) => commands::validate(a),
    }
}

/// Runs the tool on `argv` (program name first) and returns the exit status.
pub fn run<I: IntoIterator<Item = OsString>>(argv: I) -> i32 {
    let argv: Vec<String> = argv.into_iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let expanded = match config::expand(argv.clone()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(&expanded) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli, argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
