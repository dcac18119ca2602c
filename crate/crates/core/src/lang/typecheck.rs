//! Static checking of queries against a schema.

use std::collections::BTreeSet;

use super::ast::{Query, Span, Stage};
use super::PlanError;
use crate::graph::Direction;
use crate::query::{comparable, Aggregate, CmpOp, NeighborOptions};
use crate::schema::{EdgeTypeId, NodeTypeId, PropertyId, Schema};
use crate::value::{Value, ValueKind};

/// How many items a result holds, statically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cardinality {
    One,
    Many,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResultType {
    /// Node types the members may have. One type means a homogeneous set.
    Instances(BTreeSet<NodeTypeId>),
    Values { kind: ValueKind, ordered: bool },
    Scalar(ValueKind),
    Path,
    Groups { key: ValueKind, value: ValueKind },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathTarget {
    /// Written `type:id`.
    Typed(NodeTypeId, String),
    /// A bare id, looked up in every node type.
    Any(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypedStage {
    Traverse { edge: EdgeTypeId, direction: Direction },
    Prop(PropertyId),
    Filter { prop: PropertyId, op: CmpOp, literal: Value },
    NeighborAt { n: usize, opts: NeighborOptions },
    NeighborWithin { n: usize, opts: NeighborOptions },
    Path { target: PathTarget, max: Option<usize> },
    GroupBy { key: PropertyId, value: PropertyId },
    Aggregate(Aggregate),
}

/// A query resolved against a schema.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedQuery {
    pub query: Query,
    pub source: NodeTypeId,
    pub source_id: Option<String>,
    /// The source stands for a root instance supplied at evaluation.
    pub pivoted: bool,
    pub stages: Vec<TypedStage>,
    /// Result type after each stage; the last entry is the query's.
    pub types: Vec<(ResultType, Cardinality)>,
}

impl TypedQuery {
    pub fn output(&self) -> &ResultType {
        &self.types.last().expect("source type").0
    }

    pub fn cardinality(&self) -> Cardinality {
        self.types.last().expect("source type").1
    }
}

pub fn typecheck(query: &Query, schema: &Schema) -> Result<TypedQuery, PlanError> {
    check(query, schema, false)
}

/// Checks a query anchored at a root instance: `node()` denotes the root
/// rather than every instance of `node`.
pub fn typecheck_pivoted(query: &Query, schema: &Schema) -> Result<TypedQuery, PlanError> {
    check(query, schema, true)
}

fn err(span: Span, message: impl Into<String>) -> PlanError {
    PlanError { span, message: message.into() }
}

fn check(query: &Query, schema: &Schema, pivoted: bool) -> Result<TypedQuery, PlanError> {
    let src = &query.source;
    let source = schema
        .node_type(&src.node.node)
        .ok_or_else(|| err(src.span, format!("unknown node type `{}`", src.node.node)))?;
    if pivoted && src.node.id.is_some() {
        return Err(err(src.span, "a pivoted query starts at its root; drop the instance id"));
    }
    let card = if pivoted || src.node.id.is_some() { Cardinality::One } else { Cardinality::Many };
    let mut current = (ResultType::Instances(BTreeSet::from([source])), card);
    let mut types = vec![current.clone()];
    let mut stages = Vec::with_capacity(query.stages.len());
    for stage in &query.stages {
        let (typed, next) = check_stage(schema, &stage.node, stage.span, &current)?;
        stages.push(typed);
        current = next;
        types.push(current.clone());
    }
    Ok(TypedQuery {
        query: query.clone(),
        source,
        source_id: src.node.id.clone(),
        pivoted,
        stages,
        types,
    })
}

fn describe(schema: &Schema, t: &ResultType) -> String {
    match t {
        ResultType::Instances(types) if types.len() == 1 => {
            format!("instances of `{}`", schema.node_name(*types.first().unwrap()))
        }
        ResultType::Instances(_) => "instances of mixed types".into(),
        ResultType::Values { kind, .. } => format!("values of kind {kind}"),
        ResultType::Scalar(k) => format!("a single {k}"),
        ResultType::Path => "a path".into(),
        ResultType::Groups { .. } => "a grouping".into(),
    }
}

fn property(schema: &Schema, node: NodeTypeId, name: &str, span: Span) -> Result<PropertyId, PlanError> {
    schema
        .property_named(node, name)
        .ok_or_else(|| err(span, format!("unknown property `{name}` on `{}`", schema.node_name(node))))
}

fn edge_opts(schema: &Schema, edges: &Option<Vec<String>>, span: Span) -> Result<NeighborOptions, PlanError> {
    let edges = match edges {
        None => None,
        Some(names) => Some(
            names
                .iter()
                .map(|n| schema.edge_type(n).ok_or_else(|| err(span, format!("unknown edge type `{n}`"))))
                .collect::<Result<Vec<_>, _>>()?,
        ),
    };
    Ok(NeighborOptions { edges, forward_only: false })
}

/// Node types one undirected schema step away from `types`.
fn step_types(schema: &Schema, types: &BTreeSet<NodeTypeId>, opts: &NeighborOptions) -> BTreeSet<NodeTypeId> {
    let mut out = BTreeSet::new();
    for (id, e) in schema.edge_types() {
        if opts.edges.as_ref().is_some_and(|allowed| !allowed.contains(&id)) {
            continue;
        }
        if types.contains(&e.source) {
            out.insert(e.destination);
        }
        if types.contains(&e.destination) && !opts.forward_only {
            out.insert(e.source);
        }
    }
    out
}

/// Types reachable by walks of exactly `n` steps, or of 1 to `n` steps.
fn walk_types(
    schema: &Schema,
    start: &BTreeSet<NodeTypeId>,
    n: usize,
    opts: &NeighborOptions,
    within: bool,
) -> BTreeSet<NodeTypeId> {
    let mut history = vec![start.clone()];
    let mut union = BTreeSet::new();
    for i in 1..=n {
        let next = step_types(schema, &history[i - 1], opts);
        union.extend(next.iter().copied());
        if let Some(j) = history.iter().position(|h| *h == next) {
            // The sequence of type sets is periodic from here on.
            if within {
                return union;
            }
            let period = i - j;
            return history[j + (n - j) % period].clone();
        }
        history.push(next);
    }
    if within {
        union
    } else {
        history.pop().unwrap()
    }
}

fn check_stage(
    schema: &Schema,
    stage: &Stage,
    span: Span,
    (input, card): &(ResultType, Cardinality),
) -> Result<(TypedStage, (ResultType, Cardinality)), PlanError> {
    let card = *card;
    let wrong = |what: &str| err(span, format!("`{what}` cannot be applied to {}", describe(schema, input)));
    let single = match input {
        ResultType::Instances(t) if t.len() == 1 => t.first().copied(),
        _ => None,
    };
    let name = stage_name(stage);
    match stage {
        Stage::Traverse { edge, reverse } => {
            let node = single.ok_or_else(|| wrong(name))?;
            let id = schema.edge_type(edge).ok_or_else(|| err(span, format!("unknown edge type `{edge}`")))?;
            let e = schema.edge(id);
            let (direction, from, to) = if *reverse {
                (Direction::Reverse, e.destination, e.source)
            } else {
                (Direction::Forward, e.source, e.destination)
            };
            if from != node {
                return Err(err(
                    span,
                    format!(
                        "edge `{edge}` {} `{}`, but the input is `{}`",
                        if *reverse { "traversed backwards starts at" } else { "starts at" },
                        schema.node_name(from),
                        schema.node_name(node)
                    ),
                ));
            }
            Ok((
                TypedStage::Traverse { edge: id, direction },
                (ResultType::Instances(BTreeSet::from([to])), Cardinality::Many),
            ))
        }
        Stage::Prop(p) => {
            let node = single.ok_or_else(|| wrong(name))?;
            let id = property(schema, node, p, span)?;
            let def = schema.property(id);
            Ok((TypedStage::Prop(id), (ResultType::Values { kind: def.kind, ordered: def.ordered }, card)))
        }
        Stage::Filter { prop, op, literal } => {
            let node = single.ok_or_else(|| wrong(name))?;
            let id = property(schema, node, prop, span)?;
            let kind = schema.property(id).kind;
            let literal = literal.to_value();
            if !comparable(kind, *op, &literal) {
                return Err(err(
                    span,
                    format!("cannot compare `{prop}` ({kind}) {op} {} literal", literal.kind()),
                ));
            }
            Ok((TypedStage::Filter { prop: id, op: *op, literal }, (input.clone(), card)))
        }
        Stage::NeighborAt { n, edges } | Stage::NeighborWithin { n, edges } => {
            let ResultType::Instances(types) = input else { return Err(wrong(name)) };
            let opts = edge_opts(schema, edges, span)?;
            let n = usize::try_from(*n).map_err(|_| err(span, "neighborhood radius out of range"))?;
            let within = matches!(stage, Stage::NeighborWithin { .. });
            let out = walk_types(schema, types, n, &opts, within);
            let typed = if within {
                TypedStage::NeighborWithin { n, opts }
            } else {
                TypedStage::NeighborAt { n, opts }
            };
            Ok((typed, (ResultType::Instances(out), Cardinality::Many)))
        }
        Stage::Path { target, max } => {
            if !matches!(input, ResultType::Instances(_)) {
                return Err(wrong(name));
            }
            if card != Cardinality::One {
                return Err(err(span, "`path` needs a single source instance"));
            }
            let target = match target.split_once(':') {
                Some((node, id)) if schema.node_type(node).is_some() => {
                    PathTarget::Typed(schema.node_type(node).unwrap(), id.to_string())
                }
                _ => PathTarget::Any(target.clone()),
            };
            let max = max
                .map(|m| usize::try_from(m).map_err(|_| err(span, "path bound out of range")))
                .transpose()?;
            Ok((TypedStage::Path { target, max }, (ResultType::Path, Cardinality::One)))
        }
        Stage::GroupBy { key, value } => {
            let node = single.ok_or_else(|| wrong(name))?;
            let k = property(schema, node, key, span)?;
            let v = property(schema, node, value, span)?;
            let out = ResultType::Groups {
                key: ValueKind::Scalar(schema.property(k).kind.element()),
                value: schema.property(v).kind,
            };
            Ok((TypedStage::GroupBy { key: k, value: v }, (out, Cardinality::One)))
        }
        Stage::Aggregate(agg) => {
            let out = match (input, agg) {
                (ResultType::Instances(_) | ResultType::Groups { .. }, Aggregate::Count) => {
                    ResultType::Scalar(ValueKind::INT)
                }
                (ResultType::Values { kind, .. }, agg) => {
                    let out = agg.output_kind(*kind).ok_or_else(|| {
                        err(span, format!("`{}` is not defined for values of kind {kind}", agg.name()))
                    })?;
                    if *agg == Aggregate::Distinct {
                        ResultType::Values { kind: out, ordered: false }
                    } else {
                        ResultType::Scalar(out)
                    }
                }
                _ => return Err(wrong(name)),
            };
            let card = if matches!(out, ResultType::Scalar(_)) { Cardinality::One } else { card };
            Ok((TypedStage::Aggregate(agg.clone()), (out, card)))
        }
    }
}

fn stage_name(stage: &Stage) -> &'static str {
    match stage {
        Stage::Traverse { .. } => "~>",
        Stage::Prop(_) => "prop",
        Stage::Filter { .. } => "filter",
        Stage::NeighborAt { .. } => "neighborAt",
        Stage::NeighborWithin { .. } => "neighborWithin",
        Stage::Path { .. } => "path",
        Stage::GroupBy { .. } => "groupBy",
        Stage::Aggregate(a) => a.name(),
    }
}
