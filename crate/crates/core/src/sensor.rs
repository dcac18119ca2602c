//! Sensors: black-box functions bound to the schema.
//!
//! Property sensors compute a value for one instance, matching sensors
//! decide whether an edge joins two existing instances, and generating
//! sensors create destination instances from a source instance. Sensors are
//! looked up by name in a [`SensorRegistry`] so that schema documents can
//! refer to them as `name(arg, ...)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::graph::{Direction, InstanceGraph, InstanceRef, NodeInstance};
use crate::schema::{NodeTypeId, Schema, SchemaError};
use crate::value::{ScalarKind, Value, ValueKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensorError {
    #[error("instance `{instance}` has no attribute `{attribute}`")]
    MissingAttribute { instance: String, attribute: String },
    #[error("instance `{instance}`: expected {expected}, found {found}")]
    KindMismatch { instance: String, expected: ValueKind, found: ValueKind },
    #[error("sensor `{sensor}` failed: {reason}")]
    Failed { sensor: String, reason: String },
    #[error("classifier `{0}` has not been trained")]
    Untrained(String),
    #[error("unknown sensor `{0}`")]
    UnknownSensor(String),
    #[error("sensor `{name}` takes {expected} argument(s), got {found}")]
    BadArity { name: String, expected: usize, found: usize },
    #[error("malformed sensor reference `{0}`")]
    Syntax(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensorMode {
    Property,
    Matching,
    Generating,
}

impl fmt::Display for SensorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SensorMode::Property => "property",
            SensorMode::Matching => "matching",
            SensorMode::Generating => "generating",
        })
    }
}

/// Output contract of a property sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensorOutput {
    /// Polymorphic: conforms to whatever kind the property declares.
    Any,
    /// Any list kind.
    AnyList,
    Exact(ValueKind),
}

impl fmt::Display for SensorOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SensorOutput::Any => f.write_str("any"),
            SensorOutput::AnyList => f.write_str("list<any>"),
            SensorOutput::Exact(k) => write!(f, "{k}"),
        }
    }
}

/// Node type names an edge sensor is restricted to. `None` means generic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    pub input: Option<String>,
    pub output: Option<String>,
}

pub struct SensorContext<'a> {
    pub graph: &'a InstanceGraph,
    pub at: InstanceRef,
    pub instance: &'a NodeInstance,
    pub kind: ValueKind,
    pub ordered: bool,
}

pub trait PropertySensor: Send + Sync {
    fn describe(&self) -> String;

    fn output(&self) -> SensorOutput {
        SensorOutput::Any
    }

    fn input_type(&self) -> Option<String> {
        None
    }

    /// Checks bindings that need the complete schema. Runs at freeze.
    fn validate(&self, _schema: &Schema, _owner: NodeTypeId, _kind: ValueKind) -> Result<(), SchemaError> {
        Ok(())
    }

    fn compute(&self, ctx: &SensorContext<'_>) -> Result<Value, SensorError>;
}

pub trait MatchingSensor: Send + Sync {
    fn describe(&self) -> String;

    fn signature(&self) -> Signature {
        Signature::default()
    }

    fn matches(&self, source: &NodeInstance, destination: &NodeInstance) -> bool;

    /// Attribute pair when the sensor is exactly an equality of
    /// [`join_key`]s; lets population use a hash join.
    fn key_columns(&self) -> Option<(&str, &str)> {
        None
    }
}

pub trait GeneratingSensor: Send + Sync {
    fn describe(&self) -> String;

    fn signature(&self) -> Signature {
        Signature::default()
    }

    fn generate(&self, source: &NodeInstance) -> Result<Vec<NodeInstance>, SensorError>;
}

#[derive(Clone)]
pub enum Sensor {
    Property(Arc<dyn PropertySensor>),
    Matching(Arc<dyn MatchingSensor>),
    Generating(Arc<dyn GeneratingSensor>),
}

impl Sensor {
    pub fn mode(&self) -> SensorMode {
        match self {
            Sensor::Property(_) => SensorMode::Property,
            Sensor::Matching(_) => SensorMode::Matching,
            Sensor::Generating(_) => SensorMode::Generating,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Sensor::Property(s) => s.describe(),
            Sensor::Matching(s) => s.describe(),
            Sensor::Generating(s) => s.describe(),
        }
    }
}

impl fmt::Debug for Sensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.mode(), self.describe())
    }
}

/// Canonical equality key of an attribute. The kind is part of the key, so
/// `Int(7)` and `Text("7")` never join.
pub fn join_key(instance: &NodeInstance, column: &str) -> Option<String> {
    instance.field(column).map(|v| format!("{v:?}"))
}

/// Reads one attribute verbatim.
pub struct Attr {
    column: String,
}

impl Attr {
    pub fn new(column: impl Into<String>) -> Self {
        Self { column: column.into() }
    }
}

impl PropertySensor for Attr {
    fn describe(&self) -> String {
        format!("attr({})", self.column)
    }

    fn compute(&self, ctx: &SensorContext<'_>) -> Result<Value, SensorError> {
        let value = ctx.instance.field(&self.column).ok_or_else(|| SensorError::MissingAttribute {
            instance: ctx.instance.id().to_string(),
            attribute: self.column.clone(),
        })?;
        conform(ctx, value.into_owned())
    }
}

fn conform(ctx: &SensorContext<'_>, value: Value) -> Result<Value, SensorError> {
    if !value.conforms_to(ctx.kind) {
        return Err(SensorError::KindMismatch {
            instance: ctx.instance.id().to_string(),
            expected: ctx.kind,
            found: value.kind(),
        });
    }
    Ok(match value {
        Value::List(l) => Value::List(l.with_ordered(ctx.ordered)),
        v => v,
    })
}

/// Reads an attribute as a list; a scalar attribute becomes a one-element
/// list.
pub struct ConstList {
    column: String,
}

impl ConstList {
    pub fn new(column: impl Into<String>) -> Self {
        Self { column: column.into() }
    }
}

impl PropertySensor for ConstList {
    fn describe(&self) -> String {
        format!("const_list({})", self.column)
    }

    fn output(&self) -> SensorOutput {
        SensorOutput::AnyList
    }

    fn compute(&self, ctx: &SensorContext<'_>) -> Result<Value, SensorError> {
        let value = ctx.instance.field(&self.column).ok_or_else(|| SensorError::MissingAttribute {
            instance: ctx.instance.id().to_string(),
            attribute: self.column.clone(),
        })?;
        let value = match value.into_owned() {
            Value::List(l) => Value::List(l),
            scalar => {
                let ValueKind::Scalar(k) = scalar.kind() else { unreachable!() };
                Value::list(k, ctx.ordered, vec![scalar]).expect("single scalar list")
            }
        };
        conform(ctx, value)
    }
}

/// Property of the first instance reached over `edge` (forward when the
/// owner is the edge source, reverse otherwise).
pub struct Follow {
    edge: String,
    property: String,
}

impl Follow {
    pub fn new(edge: impl Into<String>, property: impl Into<String>) -> Self {
        Self { edge: edge.into(), property: property.into() }
    }

    fn failed(&self, reason: impl Into<String>) -> SensorError {
        SensorError::Failed { sensor: self.describe(), reason: reason.into() }
    }
}

impl PropertySensor for Follow {
    fn describe(&self) -> String {
        format!("follow({}, {})", self.edge, self.property)
    }

    fn validate(&self, schema: &Schema, owner: NodeTypeId, kind: ValueKind) -> Result<(), SchemaError> {
        let invalid = |reason: String| SchemaError::InvalidSensor { sensor: self.describe(), reason };
        let edge = schema.require_edge(&self.edge)?;
        let e = schema.edge(edge);
        let target = if e.source == owner {
            e.destination
        } else if e.destination == owner {
            e.source
        } else {
            return Err(invalid(format!("edge `{}` is not incident to `{}`", self.edge, schema.node_name(owner))));
        };
        let prop = schema.require_property(target, &self.property)?;
        let found = schema.property(prop).kind;
        if found != kind {
            return Err(SchemaError::KindMismatch {
                property: self.property.clone(),
                declared: kind,
                produced: found.to_string(),
            });
        }
        Ok(())
    }

    fn compute(&self, ctx: &SensorContext<'_>) -> Result<Value, SensorError> {
        let schema = ctx.graph.schema();
        let edge = schema.edge_type(&self.edge).ok_or_else(|| self.failed("unknown edge"))?;
        let e = schema.edge(edge);
        let (dir, target) = if e.source == ctx.at.node {
            (Direction::Forward, e.destination)
        } else {
            (Direction::Reverse, e.source)
        };
        let prop = schema
            .property_named(target, &self.property)
            .ok_or_else(|| self.failed("unknown property"))?;
        let next = ctx
            .graph
            .neighbors(edge, dir, ctx.at)
            .first()
            .copied()
            .ok_or_else(|| self.failed(format!("`{}` has no `{}` neighbor", ctx.instance.id(), self.edge)))?;
        let value = ctx
            .graph
            .property_value(InstanceRef { node: target, index: next }, prop)
            .map_err(|e| self.failed(e.to_string()))?;
        conform(ctx, value)
    }
}

/// Matches when both instances carry equal values in the given attributes.
/// The pseudo-attribute `id` reads the instance id.
pub struct KeyEq {
    source_column: String,
    destination_column: String,
}

impl KeyEq {
    pub fn new(source_column: impl Into<String>, destination_column: impl Into<String>) -> Self {
        Self { source_column: source_column.into(), destination_column: destination_column.into() }
    }
}

impl MatchingSensor for KeyEq {
    fn describe(&self) -> String {
        format!("key_eq({}, {})", self.source_column, self.destination_column)
    }

    fn matches(&self, source: &NodeInstance, destination: &NodeInstance) -> bool {
        match (join_key(source, &self.source_column), join_key(destination, &self.destination_column)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }

    fn key_columns(&self) -> Option<(&str, &str)> {
        Some((&self.source_column, &self.destination_column))
    }
}

/// Splits a text attribute on whitespace, generating one token instance per
/// piece with attributes `text` and `position`. Token ids are scoped by the
/// source id: `<source>.tok<position>`.
pub struct TokenizeWs {
    column: String,
}

impl TokenizeWs {
    pub fn new(column: impl Into<String>) -> Self {
        Self { column: column.into() }
    }
}

impl GeneratingSensor for TokenizeWs {
    fn describe(&self) -> String {
        format!("tokenize_ws({})", self.column)
    }

    fn generate(&self, source: &NodeInstance) -> Result<Vec<NodeInstance>, SensorError> {
        let text = source.field(&self.column).ok_or_else(|| SensorError::MissingAttribute {
            instance: source.id().to_string(),
            attribute: self.column.clone(),
        })?;
        let Value::Text(text) = text.as_ref() else {
            return Err(SensorError::KindMismatch {
                instance: source.id().to_string(),
                expected: ValueKind::TEXT,
                found: text.kind(),
            });
        };
        Ok(text
            .split_whitespace()
            .enumerate()
            .map(|(i, tok)| {
                NodeInstance::new(format!("{}.tok{i}", source.id()))
                    .with("text", Value::text(tok))
                    .with("position", Value::Int(i as i64))
            })
            .collect())
    }
}

type Factory = Arc<dyn Fn(&[String]) -> Sensor + Send + Sync>;

struct Entry {
    mode: SensorMode,
    arity: usize,
    factory: Factory,
}

/// Named sensor constructors.
#[derive(Default)]
pub struct SensorRegistry {
    entries: BTreeMap<String, Entry>,
}

impl SensorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register<F>(&mut self, name: &str, mode: SensorMode, arity: usize, factory: F)
    where
        F: Fn(&[String]) -> Sensor + Send + Sync + 'static,
    {
        self.entries.insert(name.to_string(), Entry { mode, arity, factory: Arc::new(factory) });
    }

    pub fn names(&self) -> impl Iterator<Item = (&str, SensorMode)> {
        self.entries.iter().map(|(k, e)| (k.as_str(), e.mode))
    }

    /// Instantiates a sensor from a reference such as `key_eq(pid, pid)`.
    pub fn resolve(&self, reference: &str) -> Result<Sensor, SensorError> {
        let (name, args) = parse_call(reference)?;
        let entry = self.entries.get(&name).ok_or_else(|| SensorError::UnknownSensor(name.clone()))?;
        if args.len() != entry.arity {
            return Err(SensorError::BadArity { name, expected: entry.arity, found: args.len() });
        }
        Ok((entry.factory)(&args))
    }
}

pub(crate) fn parse_call(reference: &str) -> Result<(String, Vec<String>), SensorError> {
    let syntax = || SensorError::Syntax(reference.to_string());
    let text = reference.trim();
    let (name, rest) = match text.find('(') {
        Some(open) => (&text[..open], &text[open..]),
        None => (text, ""),
    };
    let name = name.trim();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(syntax());
    }
    if rest.is_empty() {
        return Ok((name.to_string(), Vec::new()));
    }
    let inner = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')).ok_or_else(syntax)?;
    let mut args = Vec::new();
    if !inner.trim().is_empty() {
        for arg in inner.split(',') {
            let arg = arg.trim();
            let arg = arg
                .strip_prefix('"')
                .and_then(|a| a.strip_suffix('"'))
                .unwrap_or(arg);
            if arg.is_empty() {
                return Err(syntax());
            }
            args.push(arg.to_string());
        }
    }
    Ok((name.to_string(), args))
}

/// The built-in sensor set: `attr`, `const_list`, `follow`, `key_eq` and
/// `tokenize_ws`.
pub fn builtin_sensors() -> SensorRegistry {
    let mut r = SensorRegistry::new();
    r.register("attr", SensorMode::Property, 1, |a| Sensor::Property(Arc::new(Attr::new(&a[0]))));
    r.register("const_list", SensorMode::Property, 1, |a| {
        Sensor::Property(Arc::new(ConstList::new(&a[0])))
    });
    r.register("follow", SensorMode::Property, 2, |a| {
        Sensor::Property(Arc::new(Follow::new(&a[0], &a[1])))
    });
    r.register("key_eq", SensorMode::Matching, 2, |a| {
        Sensor::Matching(Arc::new(KeyEq::new(&a[0], &a[1])))
    });
    r.register("tokenize_ws", SensorMode::Generating, 1, |a| {
        Sensor::Generating(Arc::new(TokenizeWs::new(&a[0])))
    });
    r
}

/// Scalar kind used by the table reader for columns no property declares.
pub const DEFAULT_COLUMN_KIND: ScalarKind = ScalarKind::Text;
