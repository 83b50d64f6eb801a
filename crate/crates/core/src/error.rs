use thiserror::Error;

use crate::expr::{EvalError, ExprError};

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid expression for {what}: {source}")]
    Expr {
        what: String,
        #[source]
        source: ExprError,
    },
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("config error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("iterate x_{step} = {value} left the domain [{lo}, {hi}]")]
    DomainEscape {
        step: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("lambda estimate unavailable: {0}")]
    Estimate(String),
    #[error("uniqueness probe failed for start {start}: {source}")]
    Probe {
        start: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("unknown builtin `{id}` (available: {available})")]
    UnknownBuiltin { id: String, available: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
