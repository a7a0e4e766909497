//! `compass`: tables and figure data for compass and squeezed number states.
//!
//! Exit codes: 0 ok, 1 I/O failure, 2 usage or config error, 3 numerical
//! failure (truncation overflow, unstable regime, empty branch, window).

mod args;
mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::Cli;

#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<compass_core::Error>() {
        return if e.is_numerical() { 3 } else { 2 };
    }
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    1
}

fn parse() -> Result<Cli, clap::Error> {
    let argv = match config::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => return Err(Cli::command().error(clap::error::ErrorKind::InvalidValue, e.0)),
    };
    let cmd = Cli::command().mut_subcommands(|s| s.args_override_self(true)).args_override_self(true);
    let matches = cmd.try_get_matches_from(argv)?;
    Cli::from_arg_matches(&matches)
}

fn main() -> ExitCode {
    let mut cli = match parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    cli.command.normalize();
    let run = commands::Run { command: &cli.command, global: &cli.global, out: output::resolve(cli.global.out.as_deref()) };
    match commands::dispatch(&run) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
