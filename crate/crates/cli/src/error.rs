use std::path::PathBuf;

use serde_json::{json, Value};
use thiserror::Error;

/// Failures of a CLI command, mapped onto process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or flag values.
    #[error("{0}")]
    Usage(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Input { path: String, message: String },

    #[error(transparent)]
    Core(#[from] convtile::Error),

    /// A configuration given on the command line breaks its constraints.
    #[error("infeasible configuration: {}", violations.join("; "))]
    Violations { violations: Vec<String> },
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn input(path: impl Into<String>, message: impl ToString) -> Self {
        CliError::Input {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// 1 for usage and parse errors, 2 for infeasibility and budgets.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_infeasible() => 2,
            CliError::Violations { .. } => 2,
            _ => 1,
        }
    }

    /// Machine-readable form printed on stdout for exit code 2.
    pub fn diagnostic(&self) -> Value {
        let kind = match self {
            CliError::Core(convtile::Error::Parallelism { .. }) => "infeasible_parallelism",
            CliError::Core(convtile::Error::Budget { .. }) => "budget_exceeded",
            CliError::Core(convtile::Error::Infeasible(_)) => "infeasible",
            CliError::Violations { .. } => "infeasible",
            CliError::Usage(_) => "usage",
            _ => "error",
        };
        let mut out = json!({ "error": kind, "message": self.to_string() });
        match self {
            CliError::Violations { violations } => {
                out["violations"] = json!(violations);
            }
            CliError::Core(convtile::Error::Budget { required, budget, .. }) => {
                // u128 does not fit JSON numbers in general
                out["required"] = json!(required.to_string());
                out["budget"] = json!(budget.to_string());
            }
            CliError::Core(convtile::Error::Parallelism { cores, available }) => {
                out["cores"] = json!(cores);
                out["available"] = json!(available);
            }
            _ => {}
        }
        out
    }
}

pub type CliResult<T> = Result<T, CliError>;
