//! Command implementations behind the `convtile` binary. Every command
//! returns a serializable value; the binary prints it as JSON.

pub mod args;
pub mod commands;
pub mod document;
pub mod error;
pub mod input;

use std::path::PathBuf;

use serde_json::Value;

pub use args::{Cli, Command};
pub use document::{machine_digest, ScheduleDocument};
pub use error::{CliError, CliResult};

/// A command's JSON result and where it should go (stdout when `None`).
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub value: Value,
    pub path: Option<PathBuf>,
}

fn to_value<T: serde::Serialize>(v: &T) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| CliError::input("output", e))
}

pub fn run(cli: &Cli) -> CliResult<Output> {
    let value = match &cli.command {
        Command::Optimize(a) => to_value(&commands::optimize(a)?)?,
        Command::Cost(a) => to_value(&commands::cost(a)?)?,
        Command::Classes => to_value(&commands::catalog())?,
        Command::Enumerate(a) => to_value(&commands::enumerate(a)?)?,
        Command::Validate(a) => to_value(&commands::validate(a)?)?,
        Command::Simulate(a) => to_value(&commands::simulate_cmd(a)?)?,
    };
    Ok(Output {
        value,
        path: cli.output.clone(),
    })
}

/// Pretty JSON with a trailing newline; key order is deterministic.
pub fn render(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s
}
