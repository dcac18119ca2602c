//! Declarative constraints over classifier outputs and joint decoding.

mod classifier;
mod expr;
mod solve;

pub use classifier::{handle, AssignedLabel, Assignment, ClassifierHandle, ConstrainedClassifier};
pub use expr::{parse_constraint, ConstraintExpr, Relation};
pub use solve::{log_softmax, Formula, InferenceProblem, Solution, Variable, EXACT_LIMIT, RESTARTS};

use thiserror::Error;

use crate::graph::GraphError;
use crate::lang::LangError;
use crate::learn::LearnError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstraintError {
    #[error("offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unknown classifier `{0}`")]
    UnknownClassifier(String),
    #[error("classifier `{0}` has not been trained")]
    UntrainedClassifier(String),
    #[error("classifier `{0}` is not a classification learner")]
    NotClassification(String),
    #[error("no label assigned for `{classifier}` on `{instance}`")]
    Unassigned { classifier: String, instance: String },
    #[error("query `{query}` {reason}")]
    Collection { query: String, reason: String },
    #[error("expected an instance of `{expected}`, found `{found}`")]
    ScopeMismatch { expected: String, found: String },
    #[error("classifier `{0}` lock is poisoned")]
    Poisoned(String),
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Learn(LearnError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl From<LearnError> for ConstraintError {
    fn from(e: LearnError) -> Self {
        match e {
            LearnError::Untrained(name) => ConstraintError::UntrainedClassifier(name),
            other => ConstraintError::Learn(other),
        }
    }
}
