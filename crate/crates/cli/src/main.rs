//! `kslab`: run one experiment, write a versioned JSON report.

mod args;
mod catalog;
mod commands;
mod error;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::json;

use args::Cli;
use commands::Outcome;
use error::CliError;

pub const SCHEMA: &str = "kslab/1";

fn write_or_print(path: Option<&std::path::Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Write { path: p.display().to_string(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot configure threads: {e}")))?;
    }
    let start = Instant::now();
    let space = catalog::parse_space(&cli.common.space, cli.common.sidecar.as_deref())?;
    let Outcome { result, constants, csv, success } = commands::dispatch(&cli.command, &cli.common, &space)?;
    if cli.common.csv.is_some() && csv.is_none() {
        return Err(CliError::Config(format!("`{}` has no CSV projection", cli.command.name())));
    }
    let mut report = json!({
        "schema": SCHEMA,
        "command": cli.command.name(),
        "version": kslab_core::VERSION,
        "config": cli,
        "constants": constants,
        "result": result,
    });
    if !cli.common.no_timing {
        report["wall_time_s"] = json!(start.elapsed().as_secs_f64());
    }
    write_or_print(cli.common.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    if let (Some(path), Some(text)) = (&cli.common.csv, csv) {
        write_or_print(Some(path), &text)?;
    }
    Ok(success)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
