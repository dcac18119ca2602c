//! Learnable specifications and trained learners.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::encode::{encode_with, FeatureQuery};
use super::lexicon::{FeatureVector, Lexicon};
use super::metrics::{classification_report, regression_report, EvalReport};
use super::sgd::{train_one_vs_all, train_regression, SgdConfig};
use super::LearnError;
use crate::graph::{InstanceGraph, InstanceRef};
use crate::lang::{compile_pivoted, evaluate_at, Cardinality, QueryResult, ResultType, TypedQuery};
use crate::schema::{NodeTypeId, Schema};
use crate::value::{ScalarKind, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

type Predicate = Arc<dyn Fn(&InstanceGraph, InstanceRef) -> bool + Send + Sync>;

/// Which root instances become examples.
#[derive(Clone, Default)]
pub enum ExampleFilter {
    #[default]
    All,
    /// A pivoted query; a root is kept when the result is a non-empty
    /// instance set, a non-empty value sequence or the scalar `true`.
    Query(Box<TypedQuery>),
    Predicate(Predicate),
}

impl fmt::Debug for ExampleFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExampleFilter::All => f.write_str("All"),
            ExampleFilter::Query(q) => write!(f, "Query({})", q.query),
            ExampleFilter::Predicate(_) => f.write_str("Predicate"),
        }
    }
}

impl ExampleFilter {
    pub fn keeps(&self, graph: &InstanceGraph, root: InstanceRef) -> Result<bool, LearnError> {
        Ok(match self {
            ExampleFilter::All => true,
            ExampleFilter::Predicate(p) => p(graph, root),
            ExampleFilter::Query(q) => match evaluate_at(q, graph, root)? {
                QueryResult::Instances(s) => !s.is_empty(),
                QueryResult::Values(v) => !v.is_empty(),
                QueryResult::Scalar(v) => v == Value::Bool(true),
                QueryResult::Groups(g) => !g.is_empty(),
                QueryResult::Path(p) => p.step_count().is_some(),
            },
        })
    }
}

/// Everything needed to build examples and train one model.
#[derive(Debug, Clone)]
pub struct LearnableSpec {
    pub name: String,
    pub root: NodeTypeId,
    pub label: TypedQuery,
    pub features: Vec<FeatureQuery>,
    pub filter: ExampleFilter,
    pub task: Task,
    pub sgd: SgdConfig,
}

fn pivoted(text: &str, schema: &Schema, root: NodeTypeId) -> Result<TypedQuery, LearnError> {
    let q = compile_pivoted(text, schema)?;
    if q.source != root {
        return Err(LearnError::Config(format!(
            "query `{text}` starts at `{}`, not at the root `{}`",
            schema.node_name(q.source),
            schema.node_name(root)
        )));
    }
    Ok(q)
}

/// Task implied by the label query's output kind.
fn label_task(label: &TypedQuery) -> Option<Task> {
    let kind = match label.output() {
        ResultType::Scalar(k) => *k,
        ResultType::Values { kind, .. } if label.cardinality() == Cardinality::One => *kind,
        _ => return None,
    };
    match kind {
        crate::value::ValueKind::Scalar(k) if k.is_numeric() => Some(Task::Regression),
        crate::value::ValueKind::Scalar(ScalarKind::Text | ScalarKind::Bool) => Some(Task::Classification),
        _ => None,
    }
}

impl LearnableSpec {
    /// Compiles the label and feature queries, all pivoted at `root`. The
    /// task follows from the label kind unless given.
    pub fn new(
        schema: &Schema,
        name: &str,
        root: &str,
        label: &str,
        features: &[&str],
        task: Option<Task>,
    ) -> Result<Self, LearnError> {
        let root = schema.require_node(root).map_err(|e| LearnError::Config(e.to_string()))?;
        let label = pivoted(label, schema, root)?;
        let implied = label_task(&label).ok_or_else(|| LearnError::LabelKind {
            query: label.query.to_string(),
            found: format!("{:?}", label.output()),
        })?;
        if let Some(t) = task {
            if t != implied {
                return Err(LearnError::TaskMismatch { declared: t, implied });
            }
        }
        let features = features
            .iter()
            .map(|f| pivoted(f, schema, root).map(FeatureQuery::new))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            name: name.to_string(),
            root,
            label,
            features,
            filter: ExampleFilter::All,
            task: implied,
            sgd: SgdConfig::default(),
        })
    }

    pub fn with_filter_query(mut self, schema: &Schema, text: &str) -> Result<Self, LearnError> {
        self.filter = ExampleFilter::Query(Box::new(pivoted(text, schema, self.root)?));
        Ok(self)
    }

    pub fn with_filter<F>(mut self, keep: F) -> Self
    where
        F: Fn(&InstanceGraph, InstanceRef) -> bool + Send + Sync + 'static,
    {
        self.filter = ExampleFilter::Predicate(Arc::new(keep));
        self
    }

    pub fn with_sgd(mut self, sgd: SgdConfig) -> Self {
        self.sgd = sgd;
        self
    }

    /// Label of `root`, or `None` when the label query yields no single
    /// value.
    pub fn label_of(&self, graph: &InstanceGraph, root: InstanceRef) -> Option<Value> {
        match evaluate_at(&self.label, graph, root).ok()? {
            QueryResult::Scalar(v) => Some(v),
            QueryResult::Values(seq) if seq.len() == 1 => seq.into_values().pop(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningExample {
    pub root: InstanceRef,
    pub features: FeatureVector,
    pub label: Value,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExampleSet {
    pub examples: Vec<LearningExample>,
    /// Roots passing the filter whose label could not be computed.
    pub skipped: usize,
}

/// Builds examples for the roots passing the spec's filter. Features are
/// indexed through `lexicon`, which grows unless frozen.
pub fn build_examples(
    graph: &InstanceGraph,
    spec: &LearnableSpec,
    roots: &[InstanceRef],
    lexicon: &mut Lexicon,
) -> Result<ExampleSet, LearnError> {
    let mut set = ExampleSet::default();
    for &root in roots {
        if root.node != spec.root || !spec.filter.keeps(graph, root)? {
            continue;
        }
        let Some(label) = spec.label_of(graph, root) else {
            set.skipped += 1;
            continue;
        };
        let features = encode_with(graph, root, &spec.features, |n| lexicon.intern(n))?;
        set.examples.push(LearningExample { root, features, label });
    }
    Ok(set)
}

fn label_text(v: &Value) -> String {
    v.to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinearModel {
    Regression { weights: Vec<f64> },
    /// One weight vector per label; labels sorted.
    Classification { labels: Vec<String>, weights: Vec<Vec<f64>> },
}

impl LinearModel {
    /// Per-label linear scores, or the single regression output.
    pub fn scores(&self, x: &FeatureVector) -> Vec<f64> {
        match self {
            LinearModel::Regression { weights } => vec![x.dot(weights)],
            LinearModel::Classification { weights, .. } => weights.iter().map(|w| x.dot(w)).collect(),
        }
    }

    /// Regression output, or the best-scoring label with ties going to the
    /// lexically smallest label.
    pub fn predict(&self, x: &FeatureVector) -> Value {
        match self {
            LinearModel::Regression { weights } => Value::Real(x.dot(weights)),
            LinearModel::Classification { labels, .. } => {
                let scores = self.scores(x);
                let mut best = 0;
                for (i, s) in scores.iter().enumerate() {
                    if *s > scores[best] {
                        best = i;
                    }
                }
                Value::Text(labels[best].clone())
            }
        }
    }

    pub fn labels(&self) -> &[String] {
        match self {
            LinearModel::Regression { .. } => &[],
            LinearModel::Classification { labels, .. } => labels,
        }
    }
}

/// Trains a model of dimension `dim` on built examples.
pub fn train(task: Task, examples: &[LearningExample], dim: usize, sgd: &SgdConfig) -> Result<LinearModel, LearnError> {
    match task {
        Task::Regression => {
            let data = examples
                .iter()
                .map(|e| {
                    let y = e.label.as_f64().ok_or_else(|| LearnError::LabelKind {
                        query: "label".into(),
                        found: e.label.kind().to_string(),
                    })?;
                    Ok((e.features.clone(), y))
                })
                .collect::<Result<Vec<_>, LearnError>>()?;
            Ok(LinearModel::Regression { weights: train_regression(&data, dim, sgd)? })
        }
        Task::Classification => {
            let mut labels: Vec<String> = examples.iter().map(|e| label_text(&e.label)).collect();
            labels.sort();
            labels.dedup();
            let data: Vec<(FeatureVector, usize)> = examples
                .iter()
                .map(|e| (e.features.clone(), labels.binary_search(&label_text(&e.label)).unwrap()))
                .collect();
            let weights = train_one_vs_all(&data, labels.len(), dim, sgd)?;
            Ok(LinearModel::Classification { labels, weights })
        }
    }
}

/// Evaluates a model on built examples.
pub fn evaluate_model(model: &LinearModel, examples: &[LearningExample]) -> Result<EvalReport, LearnError> {
    match model {
        LinearModel::Regression { .. } => {
            let mut truth = Vec::with_capacity(examples.len());
            for e in examples {
                truth.push(e.label.as_f64().ok_or_else(|| LearnError::LabelKind {
                    query: "label".into(),
                    found: e.label.kind().to_string(),
                })?);
            }
            let predicted: Vec<f64> = examples.iter().map(|e| model.scores(&e.features)[0]).collect();
            Ok(EvalReport::Regression(regression_report(&truth, &predicted)?))
        }
        LinearModel::Classification { .. } => {
            let truth: Vec<String> = examples.iter().map(|e| label_text(&e.label)).collect();
            let predicted: Vec<String> = examples.iter().map(|e| label_text(&model.predict(&e.features))).collect();
            Ok(EvalReport::Classification(classification_report(&truth, &predicted)?))
        }
    }
}

/// Counts from a training run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainSummary {
    pub examples: usize,
    pub skipped: usize,
    pub features: usize,
}

/// A spec with its own lexicon and, once trained, its model.
#[derive(Debug, Clone)]
pub struct Learner {
    spec: LearnableSpec,
    lexicon: Lexicon,
    model: Option<LinearModel>,
}

impl Learner {
    pub fn new(spec: LearnableSpec) -> Self {
        Self { spec, lexicon: Lexicon::new(), model: None }
    }

    pub fn spec(&self) -> &LearnableSpec {
        &self.spec
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn model(&self) -> Option<&LinearModel> {
        self.model.as_ref()
    }

    pub fn is_trained(&self) -> bool {
        self.model.is_some()
    }

    /// Trains from scratch on `roots`: a fresh lexicon grows over the
    /// training examples and is then frozen.
    pub fn train(&mut self, graph: &InstanceGraph, roots: &[InstanceRef]) -> Result<TrainSummary, LearnError> {
        let mut lexicon = Lexicon::new();
        let set = build_examples(graph, &self.spec, roots, &mut lexicon)?;
        lexicon.freeze();
        let model = train(self.spec.task, &set.examples, lexicon.len(), &self.spec.sgd)?;
        let summary = TrainSummary { examples: set.examples.len(), skipped: set.skipped, features: lexicon.len() };
        self.lexicon = lexicon;
        self.model = Some(model);
        Ok(summary)
    }

    fn trained(&self) -> Result<&LinearModel, LearnError> {
        self.model.as_ref().ok_or_else(|| LearnError::Untrained(self.spec.name.clone()))
    }

    /// Examples for `roots` encoded with the frozen lexicon.
    pub fn examples(&self, graph: &InstanceGraph, roots: &[InstanceRef]) -> Result<ExampleSet, LearnError> {
        let mut lexicon = self.lexicon.clone();
        lexicon.freeze();
        build_examples(graph, &self.spec, roots, &mut lexicon)
    }

    pub fn test(&self, graph: &InstanceGraph, roots: &[InstanceRef]) -> Result<EvalReport, LearnError> {
        let model = self.trained()?;
        let set = self.examples(graph, roots)?;
        evaluate_model(model, &set.examples)
    }

    pub fn encode(&self, graph: &InstanceGraph, root: InstanceRef) -> Result<FeatureVector, LearnError> {
        encode_with(graph, root, &self.spec.features, |n| self.lexicon.lookup(n))
    }

    pub fn predict(&self, graph: &InstanceGraph, root: InstanceRef) -> Result<Value, LearnError> {
        let model = self.trained()?;
        Ok(model.predict(&self.encode(graph, root)?))
    }

    /// Labels with their linear scores, for classification learners.
    pub fn label_scores(&self, graph: &InstanceGraph, root: InstanceRef) -> Result<Vec<(String, f64)>, LearnError> {
        let model = self.trained()?;
        let scores = model.scores(&self.encode(graph, root)?);
        Ok(model.labels().iter().cloned().zip(scores).collect())
    }

    /// Predictions keyed by instance id, ready for write-back.
    pub fn predict_all(&self, graph: &InstanceGraph, roots: &[InstanceRef]) -> Result<HashMap<String, Value>, LearnError> {
        roots
            .iter()
            .map(|&r| Ok((graph.instance(r).id().to_string(), self.predict(graph, r)?)))
            .collect()
    }
}
