//! Evaluation of typed queries by the query engine.

use std::fmt::Write as _;

use super::typecheck::{PathTarget, TypedQuery, TypedStage};
use super::LangError;
use crate::graph::{Direction, GraphError, InstanceGraph, InstanceRef};
use crate::query::{self, Aggregated, Grouping, InstanceSet, PathResult, QueryError, ValueSequence};
use crate::schema::NodeTypeId;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum QueryResult {
    Instances(InstanceSet),
    Values(ValueSequence),
    Scalar(Value),
    Path(PathResult),
    Groups(Grouping),
}

/// Evaluates a query that is not pivoted.
pub fn evaluate(query: &TypedQuery, graph: &InstanceGraph) -> Result<QueryResult, LangError> {
    if query.pivoted {
        return Err(QueryError::TypeMismatch { expected: "a root instance".into(), found: "none".into() }.into());
    }
    let start = match &query.source_id {
        Some(id) => InstanceSet::single(graph.require(query.source, id)?),
        None => query::all(graph, query.source),
    };
    run(query, graph, start)
}

/// Evaluates a pivoted query at `root`.
pub fn evaluate_at(query: &TypedQuery, graph: &InstanceGraph, root: InstanceRef) -> Result<QueryResult, LangError> {
    if root.node != query.source {
        return Err(QueryError::TypeMismatch {
            expected: graph.schema().node_name(query.source).to_string(),
            found: graph.schema().node_name(root.node).to_string(),
        }
        .into());
    }
    run(query, graph, InstanceSet::single(root))
}

fn lookup_target(graph: &InstanceGraph, target: &PathTarget) -> Result<InstanceRef, LangError> {
    match target {
        PathTarget::Typed(node, id) => Ok(graph.require(*node, id)?),
        PathTarget::Any(id) => {
            let hit = graph
                .schema()
                .node_types()
                .find_map(|(node, _): (NodeTypeId, _)| graph.find(node, id));
            hit.ok_or_else(|| GraphError::UnknownInstance { node: "*".into(), id: id.clone() }.into())
        }
    }
}

fn run(query: &TypedQuery, graph: &InstanceGraph, start: InstanceSet) -> Result<QueryResult, LangError> {
    let mut current = QueryResult::Instances(start);
    for stage in &query.stages {
        current = step(graph, stage, current)?;
    }
    Ok(current)
}

fn step(graph: &InstanceGraph, stage: &TypedStage, input: QueryResult) -> Result<QueryResult, LangError> {
    let mismatch = || QueryError::TypeMismatch { expected: "a compatible input".into(), found: "another result".into() };
    Ok(match (stage, input) {
        (TypedStage::Traverse { edge, direction }, QueryResult::Instances(s)) => {
            QueryResult::Instances(query::traverse(graph, &s, *edge, *direction)?)
        }
        (TypedStage::Prop(p), QueryResult::Instances(s)) => QueryResult::Values(query::project(graph, &s, *p)?),
        (TypedStage::Filter { prop, op, literal }, QueryResult::Instances(s)) => {
            QueryResult::Instances(query::filter(graph, &s, *prop, *op, literal)?)
        }
        (TypedStage::NeighborAt { n, opts }, QueryResult::Instances(s)) => {
            QueryResult::Instances(query::neighbor_at_set(graph, &s, *n, opts)?)
        }
        (TypedStage::NeighborWithin { n, opts }, QueryResult::Instances(s)) => {
            QueryResult::Instances(query::neighbor_within_set(graph, &s, *n, opts)?)
        }
        (TypedStage::Path { target, max }, QueryResult::Instances(s)) => {
            let y = lookup_target(graph, target)?;
            match s.members() {
                [x] => QueryResult::Path(query::path(graph, *x, y, *max, &Default::default())?),
                _ => return Err(mismatch().into()),
            }
        }
        (TypedStage::GroupBy { key, value }, QueryResult::Instances(s)) => {
            QueryResult::Groups(query::group_by(graph, &s, *key, *value)?)
        }
        (TypedStage::Aggregate(query::Aggregate::Count), QueryResult::Instances(s)) => {
            QueryResult::Scalar(Value::Int(s.len() as i64))
        }
        (TypedStage::Aggregate(query::Aggregate::Count), QueryResult::Groups(g)) => {
            QueryResult::Scalar(Value::Int(g.len() as i64))
        }
        (TypedStage::Aggregate(agg), QueryResult::Values(v)) => match query::aggregate(&v, agg)? {
            Aggregated::Scalar(x) => QueryResult::Scalar(x),
            Aggregated::Values(seq) => QueryResult::Values(seq),
        },
        _ => return Err(mismatch().into()),
    })
}

/// Line-oriented text form: ids or values one per line, scalars bare,
/// groups as `key: v1,v2` sorted by key.
pub fn render(result: &QueryResult, graph: &InstanceGraph) -> String {
    let mut out = String::new();
    match result {
        QueryResult::Instances(s) => {
            for id in s.ids(graph) {
                let _ = writeln!(out, "{id}");
            }
        }
        QueryResult::Values(v) => {
            for x in v.values() {
                let _ = writeln!(out, "{}", render_value(x));
            }
        }
        QueryResult::Scalar(x) => {
            let _ = writeln!(out, "{}", render_value(x));
        }
        QueryResult::Path(PathResult::NotFound) => out.push_str("no path\n"),
        QueryResult::Path(PathResult::Found(steps)) => {
            let schema = graph.schema();
            if steps.is_empty() {
                out.push_str("path of length 0\n");
            }
            for s in steps {
                let from = graph.instance(s.from).id();
                let to = graph.instance(s.to).id();
                let edge = &schema.edge(s.edge).name;
                let _ = match s.direction {
                    Direction::Forward => writeln!(out, "{from} -{edge}-> {to}"),
                    Direction::Reverse => writeln!(out, "{from} <-{edge}- {to}"),
                };
            }
        }
        QueryResult::Groups(g) => {
            for (key, values) in g.sorted() {
                let vals: Vec<String> = values.iter().map(render_value).collect();
                let _ = writeln!(out, "{}: {}", render_value(key), vals.join(","));
            }
        }
    }
    out
}

fn render_value(v: &Value) -> String {
    match v {
        Value::Real(r) => format!("{r:?}"),
        v => v.to_string(),
    }
}
