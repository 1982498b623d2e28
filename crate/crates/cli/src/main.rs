//! `cvnc`: simulate homodyne data and test it for nonclassicality.
//!
//! Results go to stdout as JSON, tables optionally to CSV files. Exit codes:
//! 0 ok, 1 usage, 2 data error, 3 numeric failure; failures also print a JSON
//! error object on stderr.

mod commands;
mod config;

use std::io::Write as _;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use crate::commands::Cli;

/// A failed run, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Data(_) => "data",
            Failure::Numeric(_) => "numeric",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<cvnc_core::Error> for Failure {
    fn from(e: cvnc_core::Error) -> Self {
        use cvnc_core::Error as E;
        match e {
            E::InvalidParams(_) | E::InvalidArgument(_) => Failure::Usage(e.to_string()),
            _ if e.is_data_error() => Failure::Data(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<config::ConfigError> for Failure {
    fn from(e: config::ConfigError) -> Self {
        match e {
            config::ConfigError::Usage(m) => Failure::Usage(m),
            config::ConfigError::Data(m) => Failure::Data(m),
        }
    }
}

fn fail(f: Failure) -> ExitCode {
    let err =
        json!({ "error": { "kind": f.kind(), "message": f.message(), "exit_code": f.code() } });
    eprintln!("{err}");
    ExitCode::from(f.code())
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => return fail(e.into()),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let text = e.to_string();
            let head = text.split("\n\n").next().unwrap_or_default();
            let message = head
                .trim_start_matches("error: ")
                .split_whitespace()
                .collect::<Vec<_>>();
            return fail(Failure::Usage(message.join(" ")));
        }
    };
    match commands::run(cli.command) {
        Ok(out) => {
            let text = serde_json::to_string_pretty(&out).expect("JSON values serialize");
            // A closed pipe on stdout is not an error of the run.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::SUCCESS
        }
        Err(f) => fail(f),
    }
}
