mod args;
mod commands;
mod error;
mod io;
mod svg;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::{CliError, CliResult};

/// Runs `f` on a pool capped at `threads` workers.
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        Some(0) => Err(CliError::usage("--threads must be at least 1")),
        #[cfg(feature = "parallel")]
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}"))),
        _ => Ok(f()),
    }
}

fn dispatch(cli: Cli) -> CliResult<ExitCode> {
    match &cli.command {
        Command::Sample(a) => commands::sample(a)?,
        Command::Estimate(a) => commands::estimate(a)?,
        Command::McRate(a) => with_threads(cli.threads, || commands::mc_rate(a))??,
        Command::McEfficiency(a) => with_threads(cli.threads, || commands::mc_efficiency(a))??,
        Command::Selfcheck(a) => {
            return Ok(if commands::selfcheck(a) { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
