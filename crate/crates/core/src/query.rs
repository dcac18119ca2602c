//! Graph queries over a populated [`InstanceGraph`]: traversal, projection,
//! filtering, joins, neighborhoods, shortest paths, aggregation and
//! grouping.
//!
//! Node collections are sets (deduplicated, first-encounter order); value
//! collections keep duplicates.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::graph::{Direction, GraphError, InstanceGraph, InstanceRef};
use crate::schema::{EdgeTypeId, NodeTypeId, PropertyId};
use crate::sensor::MatchingSensor;
use crate::value::{ScalarKind, Value, ValueKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("expected instances of `{expected}`, found `{found}`")]
    TypeMismatch { expected: String, found: String },
    #[error("property `{property}` belongs to `{owner}`, not `{found}`")]
    OwnerMismatch { property: String, owner: String, found: String },
    #[error("`{op}` is not defined for {kind}")]
    KindMismatch { op: String, kind: String },
    #[error("`{0}` of an empty collection")]
    EmptyAggregate(&'static str),
    #[error("integer overflow in `{0}`")]
    Overflow(&'static str),
}

/// Node type of an instance set. Neighborhood queries can mix types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SetType {
    Node(NodeTypeId),
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceSet {
    ty: SetType,
    members: Vec<InstanceRef>,
}

impl InstanceSet {
    /// A set of one node type. Duplicates are dropped, keeping the first.
    pub fn of(node: NodeTypeId, members: impl IntoIterator<Item = InstanceRef>) -> Self {
        Self { ty: SetType::Node(node), members: dedup(members) }
    }

    /// A set whose type is inferred from its members; empty sets are mixed.
    pub fn from_members(members: impl IntoIterator<Item = InstanceRef>) -> Self {
        let members = dedup(members);
        let ty = match members.first() {
            Some(first) if members.iter().all(|m| m.node == first.node) => SetType::Node(first.node),
            _ => SetType::Mixed,
        };
        Self { ty, members }
    }

    pub fn single(at: InstanceRef) -> Self {
        Self { ty: SetType::Node(at.node), members: vec![at] }
    }

    pub fn empty(node: NodeTypeId) -> Self {
        Self { ty: SetType::Node(node), members: Vec::new() }
    }

    pub fn set_type(&self) -> SetType {
        self.ty
    }

    pub fn node_type(&self) -> Option<NodeTypeId> {
        match self.ty {
            SetType::Node(n) => Some(n),
            SetType::Mixed => None,
        }
    }

    pub fn members(&self) -> &[InstanceRef] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, at: InstanceRef) -> bool {
        self.members.contains(&at)
    }

    pub fn ids<'g>(&self, graph: &'g InstanceGraph) -> Vec<&'g str> {
        self.members.iter().map(|&m| graph.instance(m).id()).collect()
    }
}

fn dedup(members: impl IntoIterator<Item = InstanceRef>) -> Vec<InstanceRef> {
    let mut seen = HashSet::new();
    members.into_iter().filter(|m| seen.insert(*m)).collect()
}

/// Values produced by a projection, in member order.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSequence {
    kind: ValueKind,
    values: Vec<Value>,
}

impl ValueSequence {
    pub fn new(kind: ValueKind, values: Vec<Value>) -> Self {
        Self { kind, values }
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Value> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Scalar elements, with list values spliced in.
    fn flat(&self) -> impl Iterator<Item = &Value> {
        self.values.iter().flat_map(|v| match v {
            Value::List(l) => l.items().iter().collect::<Vec<_>>(),
            v => vec![v],
        })
    }
}

/// One edge of a path, oriented in the direction it was walked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathStep {
    pub edge: EdgeTypeId,
    pub direction: Direction,
    pub from: InstanceRef,
    pub to: InstanceRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathResult {
    /// A shortest path; empty when source and target coincide.
    Found(Vec<PathStep>),
    NotFound,
}

impl PathResult {
    /// Number of steps, `None` when no path exists.
    pub fn step_count(&self) -> Option<usize> {
        match self {
            PathResult::Found(steps) => Some(steps.len()),
            PathResult::NotFound => None,
        }
    }

    pub fn steps(&self) -> &[PathStep] {
        match self {
            PathResult::Found(steps) => steps,
            PathResult::NotFound => &[],
        }
    }
}

/// Pairs produced by a join, in (left order, right order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinSet {
    left: NodeTypeId,
    right: NodeTypeId,
    pairs: Vec<(InstanceRef, InstanceRef)>,
}

impl JoinSet {
    pub fn left_type(&self) -> NodeTypeId {
        self.left
    }

    pub fn right_type(&self) -> NodeTypeId {
        self.right
    }

    pub fn pairs(&self) -> &[(InstanceRef, InstanceRef)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Distinct right members, in pair order.
    pub fn right_members(&self) -> InstanceSet {
        InstanceSet::of(self.right, self.pairs.iter().map(|p| p.1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn holds(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Whether a property of kind `kind` can be compared to `literal` with `op`.
/// A list property compared with `==`/`!=` tests membership.
pub fn comparable(kind: ValueKind, op: CmpOp, literal: &Value) -> bool {
    let ValueKind::Scalar(lit) = literal.kind() else { return false };
    let equality = matches!(op, CmpOp::Eq | CmpOp::Ne);
    let scalar_ok = |k: ScalarKind| match (k, lit) {
        (a, b) if a.is_numeric() && b.is_numeric() => true,
        (ScalarKind::Text, ScalarKind::Text) => true,
        (ScalarKind::Bool, ScalarKind::Bool) => equality,
        _ => false,
    };
    match kind {
        ValueKind::Scalar(k) => scalar_ok(k),
        ValueKind::List(k) => equality && scalar_ok(k),
    }
}

/// Evaluates `value op literal`.
pub fn compare(value: &Value, op: CmpOp, literal: &Value) -> Result<bool, QueryError> {
    if !comparable(value.kind(), op, literal) {
        return Err(QueryError::KindMismatch {
            op: format!("{op} {}", literal.kind()),
            kind: value.kind().to_string(),
        });
    }
    Ok(match value {
        Value::List(l) => {
            let member = l.items().iter().any(|item| item.compare(literal) == Some(Ordering::Equal));
            member == (op == CmpOp::Eq)
        }
        v => v.compare(literal).is_some_and(|ord| op.holds(ord)),
    })
}

fn node_name(graph: &InstanceGraph, ty: SetType) -> String {
    match ty {
        SetType::Node(n) => graph.schema().node_name(n).to_string(),
        SetType::Mixed => "mixed".to_string(),
    }
}

/// Checks that `set` holds instances of `node`. Empty sets pass.
fn expect_type(graph: &InstanceGraph, set: &InstanceSet, node: NodeTypeId) -> Result<(), QueryError> {
    if set.is_empty() || set.ty == SetType::Node(node) {
        return Ok(());
    }
    Err(QueryError::TypeMismatch {
        expected: graph.schema().node_name(node).to_string(),
        found: node_name(graph, set.ty),
    })
}

fn expect_owner(graph: &InstanceGraph, set: &InstanceSet, prop: PropertyId) -> Result<(), QueryError> {
    let def = graph.schema().property(prop);
    if set.is_empty() || set.ty == SetType::Node(def.owner) {
        return Ok(());
    }
    Err(QueryError::OwnerMismatch {
        property: def.name.clone(),
        owner: graph.schema().node_name(def.owner).to_string(),
        found: node_name(graph, set.ty),
    })
}

/// Every instance of `node`, in insertion order.
pub fn all(graph: &InstanceGraph, node: NodeTypeId) -> InstanceSet {
    InstanceSet { ty: SetType::Node(node), members: graph.refs(node).collect() }
}

/// Follows `edge` from every member; the union of their adjacency lists.
pub fn traverse(
    graph: &InstanceGraph,
    input: &InstanceSet,
    edge: EdgeTypeId,
    direction: Direction,
) -> Result<InstanceSet, QueryError> {
    let e = graph.schema().edge(edge);
    let (from, to) = match direction {
        Direction::Forward => (e.source, e.destination),
        Direction::Reverse => (e.destination, e.source),
    };
    expect_type(graph, input, from)?;
    let reached = input.members.iter().flat_map(|&m| {
        graph.neighbors(edge, direction, m).iter().map(move |&index| InstanceRef { node: to, index })
    });
    Ok(InstanceSet::of(to, reached))
}

/// One value of `prop` per member, duplicates kept.
pub fn project(graph: &InstanceGraph, input: &InstanceSet, prop: PropertyId) -> Result<ValueSequence, QueryError> {
    expect_owner(graph, input, prop)?;
    let values = input
        .members
        .iter()
        .map(|&m| graph.property_value(m, prop))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ValueSequence::new(graph.schema().property(prop).kind, values))
}

/// Members whose `prop` value satisfies `op literal`, in input order.
pub fn filter(
    graph: &InstanceGraph,
    input: &InstanceSet,
    prop: PropertyId,
    op: CmpOp,
    literal: &Value,
) -> Result<InstanceSet, QueryError> {
    expect_owner(graph, input, prop)?;
    let kind = graph.schema().property(prop).kind;
    if !comparable(kind, op, literal) {
        return Err(QueryError::KindMismatch { op: format!("{op} {}", literal.kind()), kind: kind.to_string() });
    }
    let mut kept = Vec::new();
    for &m in &input.members {
        if compare(&graph.property_value(m, prop)?, op, literal)? {
            kept.push(m);
        }
    }
    Ok(InstanceSet { ty: input.ty, members: kept })
}

/// Members accepted by an arbitrary predicate.
pub fn filter_by<F>(graph: &InstanceGraph, input: &InstanceSet, mut keep: F) -> Result<InstanceSet, QueryError>
where
    F: FnMut(&InstanceGraph, InstanceRef) -> Result<bool, QueryError>,
{
    let mut kept = Vec::new();
    for &m in &input.members {
        if keep(graph, m)? {
            kept.push(m);
        }
    }
    Ok(InstanceSet { ty: input.ty, members: kept })
}

/// All pairs (l, r) with `pred(l, r)`, ordered by left then right order.
pub fn join<F>(graph: &InstanceGraph, left: &InstanceSet, right: &InstanceSet, mut pred: F) -> Result<JoinSet, QueryError>
where
    F: FnMut(&InstanceGraph, InstanceRef, InstanceRef) -> Result<bool, QueryError>,
{
    let typed = |set: &InstanceSet| {
        set.node_type().ok_or_else(|| QueryError::TypeMismatch {
            expected: "a single node type".into(),
            found: "mixed".into(),
        })
    };
    let (lt, rt) = (typed(left)?, typed(right)?);
    let mut pairs = Vec::new();
    for &l in &left.members {
        for &r in &right.members {
            if pred(graph, l, r)? {
                pairs.push((l, r));
            }
        }
    }
    Ok(JoinSet { left: lt, right: rt, pairs })
}

/// Join on equality of two property values.
pub fn join_on(
    graph: &InstanceGraph,
    left: &InstanceSet,
    right: &InstanceSet,
    left_prop: PropertyId,
    right_prop: PropertyId,
) -> Result<JoinSet, QueryError> {
    expect_owner(graph, left, left_prop)?;
    expect_owner(graph, right, right_prop)?;
    let rvals = right
        .members
        .iter()
        .map(|&r| graph.property_value(r, right_prop))
        .collect::<Result<Vec<_>, _>>()?;
    let rindex: HashMap<InstanceRef, usize> = right.members.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    join(graph, left, right, |g, l, r| {
        let lv = g.property_value(l, left_prop)?;
        Ok(lv.same(&rvals[rindex[&r]]))
    })
}

/// Join using a matching sensor as the predicate.
pub fn join_with_sensor(
    graph: &InstanceGraph,
    left: &InstanceSet,
    right: &InstanceSet,
    sensor: &dyn MatchingSensor,
) -> Result<JoinSet, QueryError> {
    join(graph, left, right, |g, l, r| Ok(sensor.matches(g.instance(l), g.instance(r))))
}

/// Restrictions for neighborhood and path queries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NeighborOptions {
    /// Only these edge types are walked. `None` walks all.
    pub edges: Option<Vec<EdgeTypeId>>,
    /// Walk edges only from source to destination.
    pub forward_only: bool,
}

impl NeighborOptions {
    pub fn restricted(edges: Vec<EdgeTypeId>) -> Self {
        Self { edges: Some(edges), forward_only: false }
    }
}

/// Incident steps of `at`, in the fixed tie-break order: edge types in
/// declaration order, forward before reverse, then adjacency order.
fn steps<'g>(
    graph: &'g InstanceGraph,
    at: InstanceRef,
    opts: &'g NeighborOptions,
) -> impl Iterator<Item = PathStep> + 'g {
    let schema = graph.schema();
    schema
        .edge_types()
        .filter(move |(id, _)| opts.edges.as_ref().is_none_or(|allowed| allowed.contains(id)))
        .flat_map(move |(id, e)| {
            let mut dirs = Vec::with_capacity(2);
            if e.source == at.node {
                dirs.push((Direction::Forward, e.destination));
            }
            if e.destination == at.node && !opts.forward_only {
                dirs.push((Direction::Reverse, e.source));
            }
            dirs.into_iter().flat_map(move |(dir, to)| {
                graph.neighbors(id, dir, at).iter().map(move |&index| PathStep {
                    edge: id,
                    direction: dir,
                    from: at,
                    to: InstanceRef { node: to, index },
                })
            })
        })
}

/// Breadth-first search from `x` up to depth `limit`. Returns instances in
/// discovery order with their distance, and the step that discovered each.
fn bfs(
    graph: &InstanceGraph,
    x: InstanceRef,
    limit: usize,
    opts: &NeighborOptions,
    target: Option<InstanceRef>,
) -> (Vec<(InstanceRef, usize)>, HashMap<InstanceRef, PathStep>) {
    let mut order = vec![(x, 0)];
    let mut parent = HashMap::new();
    let mut seen = HashSet::from([x]);
    let mut queue = VecDeque::from([(x, 0)]);
    while let Some((u, d)) = queue.pop_front() {
        if d == limit || target == Some(u) {
            continue;
        }
        for step in steps(graph, u, opts) {
            if seen.insert(step.to) {
                parent.insert(step.to, step);
                order.push((step.to, d + 1));
                if target == Some(step.to) {
                    return (order, parent);
                }
                queue.push_back((step.to, d + 1));
            }
        }
    }
    (order, parent)
}

fn require_instance(graph: &InstanceGraph, x: InstanceRef) -> Result<(), QueryError> {
    if graph.contains(x) {
        Ok(())
    } else {
        Err(GraphError::UnknownInstance {
            node: graph.schema().node_name(x.node).to_string(),
            id: format!("#{}", x.index),
        }
        .into())
    }
}

/// Instances at shortest undirected distance exactly `n` from `x`.
pub fn neighbor_at(graph: &InstanceGraph, x: InstanceRef, n: usize, opts: &NeighborOptions) -> Result<InstanceSet, QueryError> {
    require_instance(graph, x)?;
    let (order, _) = bfs(graph, x, n, opts, None);
    Ok(InstanceSet::from_members(order.into_iter().filter(|&(_, d)| d == n).map(|(r, _)| r)))
}

/// Instances at distance 1 through `n` from `x`; `x` itself is excluded.
pub fn neighbor_within(
    graph: &InstanceGraph,
    x: InstanceRef,
    n: usize,
    opts: &NeighborOptions,
) -> Result<InstanceSet, QueryError> {
    require_instance(graph, x)?;
    let (order, _) = bfs(graph, x, n, opts, None);
    Ok(InstanceSet::from_members(order.into_iter().filter(|&(_, d)| d >= 1).map(|(r, _)| r)))
}

/// Union of [`neighbor_at`] over the members of a set.
pub fn neighbor_at_set(
    graph: &InstanceGraph,
    input: &InstanceSet,
    n: usize,
    opts: &NeighborOptions,
) -> Result<InstanceSet, QueryError> {
    let mut out = Vec::new();
    for &m in &input.members {
        out.extend(neighbor_at(graph, m, n, opts)?.members);
    }
    Ok(InstanceSet::from_members(out))
}

/// Union of [`neighbor_within`] over the members of a set.
pub fn neighbor_within_set(
    graph: &InstanceGraph,
    input: &InstanceSet,
    n: usize,
    opts: &NeighborOptions,
) -> Result<InstanceSet, QueryError> {
    let mut out = Vec::new();
    for &m in &input.members {
        out.extend(neighbor_within(graph, m, n, opts)?.members);
    }
    Ok(InstanceSet::from_members(out))
}

/// A shortest path from `x` to `y`, at most `max_len` edges long.
pub fn path(
    graph: &InstanceGraph,
    x: InstanceRef,
    y: InstanceRef,
    max_len: Option<usize>,
    opts: &NeighborOptions,
) -> Result<PathResult, QueryError> {
    require_instance(graph, x)?;
    require_instance(graph, y)?;
    if x == y {
        return Ok(PathResult::Found(Vec::new()));
    }
    let (_, parent) = bfs(graph, x, max_len.unwrap_or(usize::MAX), opts, Some(y));
    let mut steps = Vec::new();
    let mut at = y;
    while at != x {
        match parent.get(&at) {
            Some(step) => {
                steps.push(*step);
                at = step.from;
            }
            None => return Ok(PathResult::NotFound),
        }
    }
    steps.reverse();
    Ok(PathResult::Found(steps))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Aggregate {
    Count,
    Sum,
    Product,
    Max,
    Min,
    Distinct,
    MkString(String),
}

impl Aggregate {
    pub fn name(&self) -> &'static str {
        match self {
            Aggregate::Count => "count",
            Aggregate::Sum => "sum",
            Aggregate::Product => "product",
            Aggregate::Max => "max",
            Aggregate::Min => "min",
            Aggregate::Distinct => "distinct",
            Aggregate::MkString(_) => "mkString",
        }
    }

    /// Kind of the aggregate over elements of `kind`, or `None` when the
    /// aggregate is undefined for it.
    pub fn output_kind(&self, kind: ValueKind) -> Option<ValueKind> {
        let el = kind.element();
        match self {
            Aggregate::Count => Some(ValueKind::INT),
            Aggregate::Sum | Aggregate::Product | Aggregate::Max | Aggregate::Min => {
                el.is_numeric().then_some(ValueKind::Scalar(el))
            }
            Aggregate::Distinct => Some(ValueKind::Scalar(el)),
            Aggregate::MkString(_) => Some(ValueKind::TEXT),
        }
    }
}

/// Result of an aggregation: a scalar, or a sequence for `distinct`.
#[derive(Debug, Clone, PartialEq)]
pub enum Aggregated {
    Scalar(Value),
    Values(ValueSequence),
}

/// Applies an aggregate to a value sequence. List values are flattened for
/// every aggregate except `count`, which counts sequence members.
pub fn aggregate(input: &ValueSequence, agg: &Aggregate) -> Result<Aggregated, QueryError> {
    let kind_err = || QueryError::KindMismatch { op: agg.name().to_string(), kind: input.kind.to_string() };
    let out_kind = agg.output_kind(input.kind).ok_or_else(kind_err)?;
    let el = input.kind.element();
    let scalar = |v| Ok(Aggregated::Scalar(v));
    match agg {
        Aggregate::Count => scalar(Value::Int(input.len() as i64)),
        Aggregate::Sum | Aggregate::Product => {
            let is_sum = matches!(agg, Aggregate::Sum);
            if el == ScalarKind::Int {
                let mut acc: i64 = if is_sum { 0 } else { 1 };
                for v in input.flat() {
                    let Value::Int(i) = v else { return Err(kind_err()) };
                    acc = if is_sum { acc.checked_add(*i) } else { acc.checked_mul(*i) }
                        .ok_or(QueryError::Overflow(agg.name()))?;
                }
                scalar(Value::Int(acc))
            } else {
                let mut acc = if is_sum { 0.0 } else { 1.0 };
                for v in input.flat() {
                    let x = v.as_f64().ok_or_else(kind_err)?;
                    if is_sum {
                        acc += x;
                    } else {
                        acc *= x;
                    }
                }
                scalar(Value::Real(acc))
            }
        }
        Aggregate::Max | Aggregate::Min => {
            let want = if matches!(agg, Aggregate::Max) { Ordering::Greater } else { Ordering::Less };
            let mut best: Option<&Value> = None;
            for v in input.flat() {
                best = match best {
                    Some(b) if v.compare(b) != Some(want) => Some(b),
                    _ => Some(v),
                };
            }
            best.cloned().map(Aggregated::Scalar).ok_or(QueryError::EmptyAggregate(agg.name()))
        }
        Aggregate::Distinct => {
            let mut out: Vec<Value> = Vec::new();
            let mut seen = HashSet::new();
            for v in input.flat() {
                if seen.insert(format!("{v:?}")) {
                    out.push(v.clone());
                }
            }
            Ok(Aggregated::Values(ValueSequence::new(out_kind, out)))
        }
        Aggregate::MkString(sep) => {
            let parts: Vec<String> = input.flat().map(|v| v.to_string()).collect();
            scalar(Value::Text(parts.join(sep)))
        }
    }
}

/// Mapping from key values to the values of the instances carrying them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Grouping {
    groups: Vec<(Value, Vec<Value>)>,
}

impl Grouping {
    /// Groups in first-encounter order of their key.
    pub fn groups(&self) -> &[(Value, Vec<Value>)] {
        &self.groups
    }

    pub fn get(&self, key: &Value) -> Option<&[Value]> {
        self.groups.iter().find(|(k, _)| k.same(key)).map(|(_, v)| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Groups sorted by the printed form of their key.
    pub fn sorted(&self) -> Vec<&(Value, Vec<Value>)> {
        let mut out: Vec<_> = self.groups.iter().collect();
        out.sort_by(|a, b| {
            a.0.compare(&b.0).unwrap_or(Ordering::Equal).then_with(|| a.0.to_string().cmp(&b.0.to_string()))
        });
        out
    }
}

/// Groups members by `key_prop`. A list-valued key puts the member into
/// the group of every element.
pub fn group_by(
    graph: &InstanceGraph,
    input: &InstanceSet,
    key_prop: PropertyId,
    value_prop: PropertyId,
) -> Result<Grouping, QueryError> {
    expect_owner(graph, input, key_prop)?;
    expect_owner(graph, input, value_prop)?;
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<(Value, Vec<Value>)> = Vec::new();
    for &m in &input.members {
        let key = graph.property_value(m, key_prop)?;
        let value = graph.property_value(m, value_prop)?;
        let keys: Vec<Value> = match key {
            Value::List(l) => l.items().to_vec(),
            k => vec![k],
        };
        let mut placed = HashSet::new();
        for k in keys {
            let tag = format!("{k:?}");
            if !placed.insert(tag.clone()) {
                continue;
            }
            let slot = *index.entry(tag).or_insert_with(|| {
                groups.push((k, Vec::new()));
                groups.len() - 1
            });
            groups[slot].1.push(value.clone());
        }
    }
    Ok(Grouping { groups })
}
