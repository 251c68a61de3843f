//! Command-line front end: argument grammar, validated run plans, and
//! artifact emission.
//!
//! Exit codes: 0 success, 1 computational or I/O failure, 2 usage or
//! validation error.

pub mod args;
pub mod plan;
pub mod run;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use thiserror::Error;

pub use plan::{RunPlan, SetInput, Task};
pub use run::{execute, load_set, Artifact};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) | CliError::Io { .. } => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Runtime(_) => "runtime",
            CliError::Io { .. } => "io",
        }
    }
}

/// Parses `argv` (including the program name) into a validated plan.
/// `--help` and `--version` come back as a usage error carrying clap's text.
pub fn parse<I, T>(argv: I) -> Result<RunPlan, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = args::Cli::try_parse_from(argv)?;
    plan::plan(cli).map_err(|e| {
        let mut cmd = <args::Cli as clap::CommandFactory>::command();
        cmd.error(clap::error::ErrorKind::ValueValidation, e.to_string())
    })
}

/// Full command-line run; returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let plan = match parse(argv) {
        Ok(p) => p,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match execute(&plan, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let report = serde_json::json!({
                "schema_version": radmax::artifacts::SCHEMA_VERSION,
                "status": "error",
                "kind": e.kind(),
                "command": plan.command,
                "message": e.to_string(),
            });
            let _ = writeln!(stderr, "{report}");
            e.exit_code()
        }
    }
}
