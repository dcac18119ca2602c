//! Linear learning over query-defined features.
//!
//! A learning example is a root instance: its label and features are
//! queries pivoted at the root. Features are encoded through a lexicon that
//! grows during training and is frozen for testing and prediction.

mod encode;
mod family;
mod learner;
mod lexicon;
mod metrics;
mod sgd;

use thiserror::Error;

pub use encode::{encode_with, named_features, FeatureQuery};
pub use family::{make_family, rank, Family, RankEntry, Ranking};
pub use learner::{
    build_examples, evaluate_model, train, ExampleFilter, ExampleSet, LearnableSpec, Learner, LearningExample,
    LinearModel, Task, TrainSummary,
};
pub use lexicon::{FeatureVector, Lexicon, BIAS};
pub use metrics::{
    classification_report, pearson, regression_report, ClassificationReport, EvalReport, LabelScores,
    RegressionReport,
};
pub use sgd::{
    logistic_loss, logistic_loss_gradient, squared_loss, squared_loss_gradient, train_one_vs_all, train_regression,
    SgdConfig,
};

use crate::lang::LangError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error("feature `{query}`: {reason}")]
    KindMismatch { query: String, reason: String },
    #[error("feature `{feature}` has a non-finite value")]
    NonFinite { feature: String },
    #[error("label query `{query}` must yield one number, text or bool, found {found}")]
    LabelKind { query: String, found: String },
    #[error("task {declared:?} declared, but the label implies {implied:?}")]
    TaskMismatch { declared: Task, implied: Task },
    #[error("no training examples")]
    EmptyTrainingSet,
    #[error("no test examples")]
    EmptyTestSet,
    #[error("learner `{0}` has not been trained")]
    Untrained(String),
    #[error("duplicate family parameter `{0}`")]
    DuplicateParameter(String),
    #[error("empty learner family")]
    EmptyFamily,
    #[error("{0}")]
    Config(String),
}
