//! `rugscope` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure (I/O, malformed records),
//! 2 configuration error or empty corpus.

mod args;
mod commands;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use args::{Cli, Command};
use commands::CliError;

fn run(cli: &Cli) -> Result<String, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Detect(a) => commands::detect(a),
        Command::Measure(a) => commands::measure_cmd(a),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let result = run(&cli);
    let elapsed = started.elapsed().as_secs_f64();
    match result {
        Ok(line) => {
            println!("{line}");
            eprintln!("wall time: {elapsed:.3} s");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("wall time: {elapsed:.3} s");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
