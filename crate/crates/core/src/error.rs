use thiserror::Error;

use crate::point::Point;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("malformed expression: {0}")]
    Structural(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("hypothesis violated: {what}{}", witness_suffix(.witness))]
    Hypothesis { what: String, witness: Option<Point> },

    #[error("sets are not disjoint: {what}{}", witness_suffix(.witness))]
    Disjointness { what: String, witness: Option<Point> },

    #[error("cover gap: {what}{}", witness_suffix(.witness))]
    Coverage { what: String, witness: Option<Point> },

    #[error("decomposition of {what} exceeds the truncation bound {limit}")]
    Truncation { what: String, limit: usize },

    #[error("precision not reachable: {0}")]
    Precision(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("search depth exhausted at pi-base index {k}: {what}")]
    DepthExhausted { k: usize, what: String },

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("construction check {check} failed at {multi_index:?}{}", witness_suffix(.witness))]
    Construction { check: String, multi_index: Vec<usize>, witness: Option<Point> },

    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("undeclared name `{0}`")]
    Undeclared(String),

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
}

fn witness_suffix(w: &Option<Point>) -> String {
    match w {
        Some(p) => format!(" (witness {p})"),
        None => String::new(),
    }
}

impl Error {
    pub fn hypothesis(what: impl Into<String>) -> Self {
        Error::Hypothesis { what: what.into(), witness: None }
    }

    pub fn hypothesis_at(what: impl Into<String>, p: &Point) -> Self {
        Error::Hypothesis { what: what.into(), witness: Some(p.clone()) }
    }

    pub fn witness(&self) -> Option<&Point> {
        match self {
            Error::Hypothesis { witness, .. }
            | Error::Disjointness { witness, .. }
            | Error::Coverage { witness, .. }
            | Error::Construction { witness, .. } => witness.as_ref(),
            _ => None,
        }
    }

    /// Short machine-readable tag used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Structural(_) => "structural",
            Error::Domain(_) => "domain",
            Error::Hypothesis { .. } => "hypothesis",
            Error::Disjointness { .. } => "disjointness",
            Error::Coverage { .. } => "coverage",
            Error::Truncation { .. } => "truncation",
            Error::Precision(_) => "precision",
            Error::Singularity(_) => "singularity",
            Error::DepthExhausted { .. } => "depth-exhausted",
            Error::Oracle(_) => "oracle",
            Error::Unsupported(_) => "unsupported",
            Error::Construction { .. } => "construction",
            Error::Parse { .. } => "parse",
            Error::Undeclared(_) => "undeclared",
            Error::SpaceMismatch(_) => "space-mismatch",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
