use thiserror::Error;

/// Errors produced by parsing, cost evaluation, optimization and simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A JSON document did not match the expected schema.
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    /// A value is structurally valid but violates a domain rule.
    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },

    /// Tile levels do not nest (`T^l <= T^{l+1} <= N`).
    #[error("nesting violated at level {level} dim {dim}: {inner} > {outer}")]
    Nesting {
        level: usize,
        dim: char,
        inner: f64,
        outer: f64,
    },

    /// No tile configuration satisfies the constraints.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The requested parallelism cannot be realized by the tile structure.
    #[error("infeasible parallelism: need {cores} cores, at most {available} chunks available")]
    Parallelism { cores: u64, available: u64 },

    /// A combinatorial or trace budget would be exceeded.
    #[error("budget exceeded: {what} requires {required}, budget is {budget}")]
    Budget {
        what: &'static str,
        required: u128,
        budget: u128,
    },

    /// The objective or a constraint produced a non-finite value.
    #[error("non-finite value in {0}")]
    NonFinite(String),
}

impl Error {
    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invalid(what: &'static str, message: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            message: message.into(),
        }
    }

    /// True for errors that the CLI reports with the "infeasible/budget" exit code.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::Infeasible(_) | Error::Parallelism { .. } | Error::Budget { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
