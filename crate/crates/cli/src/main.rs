//! `backoff`: command-line front end for balls-into-bins queries and backoff
//! experiments.
//!
//! Exit codes: 0 pass, 1 a verdict failed, 2 usage or parameter error,
//! 3 a trace hit the slot cap.

mod args;
mod commands;
mod output;

use std::io::Write;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;

use args::{Cli, Command, Format};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_format = match cli.command {
        Command::Analytic(_) => Format::Table,
        _ => Format::Json,
    };
    let workers = cli.workers.map(|w| w as usize);
    let (mut report, code) = match commands::run(&cli.command, workers) {
        Ok(done) => done,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.timestamp {
        if let Some(obj) = report.json.as_object_mut() {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
            obj.insert("timestamp".into(), secs.into());
        }
    }
    let text = match cli.format.unwrap_or(default_format) {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.json).expect("json values serialize");
            s.push('\n');
            s
        }
        Format::Csv => report.csv,
        Format::Table => report.table,
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
