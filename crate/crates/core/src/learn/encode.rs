//! Turning pivoted query results into feature vectors.

use super::lexicon::FeatureVector;
use super::LearnError;
use crate::graph::{InstanceGraph, InstanceRef};
use crate::lang::{evaluate_at, Cardinality, QueryResult, TypedQuery};
use crate::query::PathResult;
use crate::value::{ScalarKind, Value};

/// A feature query together with the name its features are prefixed by.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureQuery {
    pub name: String,
    pub query: TypedQuery,
}

impl FeatureQuery {
    /// Names the features after the canonical text of the query.
    pub fn new(query: TypedQuery) -> Self {
        Self { name: query.query.to_string(), query }
    }
}

/// Named feature values, before lexicon lookup.
pub fn named_features(
    graph: &InstanceGraph,
    root: InstanceRef,
    features: &[FeatureQuery],
) -> Result<Vec<(String, f64)>, LearnError> {
    let mut out = Vec::new();
    for fq in features {
        let result = evaluate_at(&fq.query, graph, root)?;
        encode_result(&fq.name, &result, fq.query.cardinality(), graph, &mut out)?;
    }
    for (name, v) in &out {
        if !v.is_finite() {
            return Err(LearnError::NonFinite { feature: name.clone() });
        }
    }
    Ok(out)
}

/// Encodes `root` with a lookup that maps names to indices; names mapped to
/// `None` are dropped. The bias feature is always index 0 with value 1.
pub fn encode_with<F>(
    graph: &InstanceGraph,
    root: InstanceRef,
    features: &[FeatureQuery],
    mut index: F,
) -> Result<FeatureVector, LearnError>
where
    F: FnMut(&str) -> Option<usize>,
{
    let named = named_features(graph, root, features)?;
    let pairs = named.into_iter().filter_map(|(name, v)| index(&name).map(|i| (i, v)));
    Ok(FeatureVector::from_pairs(std::iter::once((0, 1.0)).chain(pairs)))
}

fn encode_result(
    q: &str,
    result: &QueryResult,
    card: Cardinality,
    graph: &InstanceGraph,
    out: &mut Vec<(String, f64)>,
) -> Result<(), LearnError> {
    match result {
        QueryResult::Scalar(v) => encode_value(q, v, out),
        QueryResult::Values(seq) if card == Cardinality::One && seq.len() == 1 => {
            encode_value(q, &seq.values()[0], out)
        }
        QueryResult::Values(seq) => {
            let flat = seq.values().iter().flat_map(|v| match v {
                Value::List(l) => l.items().to_vec(),
                v => vec![v.clone()],
            });
            encode_sequence(q, flat, out);
            Ok(())
        }
        QueryResult::Instances(set) => {
            for id in set.ids(graph) {
                out.push((format!("{q}={id}"), 1.0));
            }
            Ok(())
        }
        QueryResult::Groups(groups) => {
            for (key, values) in groups.groups() {
                out.push((format!("{q}={key}"), values.len() as f64));
            }
            Ok(())
        }
        QueryResult::Path(PathResult::Found(steps)) => {
            out.push((q.to_string(), steps.len() as f64));
            Ok(())
        }
        QueryResult::Path(PathResult::NotFound) => Ok(()),
    }
}

/// Sequence elements: numbers and booleans by position, text as a bag.
fn encode_sequence(q: &str, items: impl Iterator<Item = Value>, out: &mut Vec<(String, f64)>) {
    for (i, v) in items.enumerate() {
        match v {
            Value::Text(t) => out.push((format!("{q}={t}"), 1.0)),
            Value::Bool(b) => out.push((format!("{q}[{i}]"), if b { 1.0 } else { 0.0 })),
            v => out.push((format!("{q}[{i}]"), v.as_f64().unwrap_or(0.0))),
        }
    }
}

fn encode_value(q: &str, v: &Value, out: &mut Vec<(String, f64)>) -> Result<(), LearnError> {
    match v {
        Value::Int(_) | Value::Real(_) => out.push((q.to_string(), v.as_f64().unwrap())),
        Value::Bool(b) => out.push((q.to_string(), if *b { 1.0 } else { 0.0 })),
        Value::Text(t) => out.push((format!("{q}={t}"), 1.0)),
        Value::List(l) => match (l.kind(), l.ordered()) {
            (ScalarKind::Text, false) | (ScalarKind::Bool, false) => {
                for item in l.items() {
                    out.push((format!("{q}={item}"), 1.0));
                }
            }
            (ScalarKind::Text, true) => {
                for (i, item) in l.items().iter().enumerate() {
                    out.push((format!("{q}[{i}]={item}"), 1.0));
                }
            }
            (_, true) => encode_sequence(q, l.items().iter().cloned(), out),
            (kind, false) => {
                return Err(LearnError::KindMismatch {
                    query: q.to_string(),
                    reason: format!("unordered list of {kind} has no positions; declare the property ordered"),
                })
            }
        },
    }
    Ok(())
}
