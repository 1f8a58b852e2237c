mod args;
mod commands;
mod emit;
mod error;

use clap::error::ErrorKind;
use clap::Parser;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::process::ExitCode;

use args::{Cli, Format};
use error::CliError;

const THREADS_VAR: &str = "SPECGEO_THREADS";

#[derive(Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a Cli,
    tolerances: &'a BTreeMap<&'static str, f64>,
    status: &'static str,
    violations: &'a [String],
}

#[derive(Serialize)]
struct Document<'a> {
    metadata: Metadata<'a>,
    result: &'a serde_json::Value,
}

fn configure_threads() -> Result<(), CliError> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => {
            let n: usize = v.trim().parse().map_err(|e| CliError::usage(THREADS_VAR, format!("{v:?}: {e}")))?;
            specgeo::par::set_threads(n).map_err(|e| CliError::usage(THREADS_VAR, e))
        }
        Err(std::env::VarError::NotPresent) => Ok(()),
        Err(e) => Err(CliError::usage(THREADS_VAR, e)),
    }
}

fn render(cli: &Cli, report: &commands::Report) -> Result<String, CliError> {
    let metadata = Metadata {
        tool: "specgeo",
        version: env!("CARGO_PKG_VERSION"),
        config: cli,
        tolerances: &report.tolerances,
        status: if report.violations.is_empty() { "ok" } else { "violation" },
        violations: &report.violations,
    };
    match cli.format.unwrap_or(report.default_format) {
        Format::Json => {
            let mut s = emit::to_pretty(&Document { metadata, result: &report.result })?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let table = report
                .table
                .as_ref()
                .ok_or_else(|| CliError::usage("--format", "this subcommand has no tabular output; use json"))?;
            table.to_csv(&[emit::to_compact(&metadata)?])
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    let report = commands::run(&cli.command)?;
    let text = render(cli, &report)?;
    match &cli.output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("--output: {}: {e}", path.display())))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    match report.violations.first() {
        Some(v) => Err(CliError::Violation(v.clone())),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("specgeo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
