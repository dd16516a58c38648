use std::fmt;

use serde::{Deserialize, Serialize};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("malformed {what}: {reason}")]
    Malformed { what: &'static str, reason: String },

    #[error("feature `{feature}`: {reason}")]
    InvalidFeature { feature: String, reason: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(Violations),

    #[error("invalid grid options: {0}")]
    InvalidGrid(String),

    #[error("invalid rule model: {0}")]
    InvalidModel(String),

    #[error("no decision boundary: every grid point is classified `{0}`")]
    NoBoundary(String),

    #[error("no {0} explanation exists for this instance")]
    NoExplanation(&'static str),

    #[error("invalid search budget: {0}")]
    InvalidBudget(String),

    #[error("heuristic search found no point satisfying the constraints")]
    SearchExhausted,

    #[error("render: {0}")]
    Render(String),
}

/// One reason an instance does not fit a schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Missing { feature: String },
    OutOfDomain { feature: String, reason: String },
    UnknownFeature { feature: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Missing { feature } => write!(f, "`{feature}` is missing"),
            Violation::OutOfDomain { feature, reason } => write!(f, "`{feature}` {reason}"),
            Violation::UnknownFeature { feature } => write!(f, "`{feature}` is not in the schema"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Violations(pub Vec<Violation>);

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
