use std::fmt;

use serde::{Deserialize, Serialize};

use crate::session::Stage;

pub type Result<T> = std::result::Result<T, StudyError>;

/// One rejected field of a submission.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        FieldError {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn join(errors: &[FieldError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error("submission for stage `{got}` but the session is at `{expected}`")]
    WrongStage { expected: Stage, got: Stage },
    #[error("invalid submission: {}", join(.0))]
    Validation(Vec<FieldError>),
    #[error("item {got} is not on screen; the current item is {current}")]
    StaleItem { current: usize, got: usize },
    #[error("session is already {0}")]
    Terminal(Stage),
    #[error("no {phase} item with index {index}")]
    UnknownItem { phase: &'static str, index: usize },
    #[error("incomplete session: {0}")]
    Incomplete(String),
    #[error("invalid study config: {0}")]
    Config(String),
    #[error("event log: {0}")]
    Log(String),
    #[error(transparent)]
    Engine(#[from] alterfactual_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
