//! The first-order data model: node types, property types and edge types,
//! each bound to sensors.
//!
//! A schema is assembled with [`SchemaBuilder`] and frozen into an immutable
//! [`Schema`]. Types are addressed by dense ids that index the schema's
//! declaration tables, so declaration order doubles as the deterministic
//! iteration order used by population and traversal.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::graph::{InstanceGraph, InstanceRef};
use crate::sensor::{
    GeneratingSensor, MatchingSensor, PropertySensor, Sensor, SensorError, SensorMode,
    SensorOutput,
};
use crate::value::{Value, ValueKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeTypeId(pub(crate) usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeTypeId(pub(crate) usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PropertyId(pub(crate) usize);

impl NodeTypeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl EdgeTypeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl PropertyId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemaError {
    #[error("duplicate {what} name `{name}`")]
    DuplicateName { what: &'static str, name: String },
    #[error("unknown node type `{0}`")]
    UnknownNodeType(String),
    #[error("unknown edge type `{0}`")]
    UnknownEdgeType(String),
    #[error("unknown property `{property}` on node type `{node}`")]
    UnknownProperty { node: String, property: String },
    #[error("property `{property}` declared as {declared} but its sensor produces {produced}")]
    KindMismatch { property: String, declared: ValueKind, produced: String },
    #[error("sensor `{sensor}` is a {found} sensor, expected {expected}")]
    ModeMismatch { sensor: String, expected: &'static str, found: SensorMode },
    #[error("sensor `{sensor}` expects {expected} but is attached to `{found}`")]
    SignatureMismatch { sensor: String, expected: String, found: String },
    #[error("sensor `{sensor}`: {reason}")]
    InvalidSensor { sensor: String, reason: String },
}

/// Whether a node type wraps a base-type record or a pair produced by a join.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Atomic,
    Composed { left: NodeTypeId, right: NodeTypeId },
}

#[derive(Debug, Clone)]
pub struct NodeType {
    pub name: String,
    pub kind: NodeKind,
}

/// Which member of a composed instance a forwarded property reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn prefix(self) -> &'static str {
        match self {
            Side::Left => "left_",
            Side::Right => "right_",
        }
    }
}

/// A property whose value is recomputed on every read, typically the output
/// of a learner.
pub trait DynamicProperty: Send + Sync {
    fn describe(&self) -> String;
    fn compute(&self, graph: &InstanceGraph, at: InstanceRef) -> Result<Value, SensorError>;
}

/// Where a property's values come from.
#[derive(Clone)]
pub enum PropertySource {
    Sensor(Arc<dyn PropertySensor>),
    /// Forwarded from one member of a composed node.
    Composed { side: Side, inner: PropertyId },
    /// Written back predictions, keyed by instance id.
    Stored(Arc<HashMap<String, Value>>),
    Dynamic(Arc<dyn DynamicProperty>),
}

impl PropertySource {
    pub fn describe(&self, schema: &Schema) -> String {
        match self {
            PropertySource::Sensor(s) => s.describe(),
            PropertySource::Composed { side, inner } => {
                format!("{}{}", side.prefix(), schema.property(*inner).name)
            }
            PropertySource::Stored(values) => format!("stored({})", values.len()),
            PropertySource::Dynamic(d) => d.describe(),
        }
    }

    /// Memoized sources are pure functions of the populated graph.
    pub fn memoized(&self) -> bool {
        matches!(self, PropertySource::Sensor(_) | PropertySource::Composed { .. })
    }
}

impl fmt::Debug for PropertySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropertySource::Sensor(s) => write!(f, "Sensor({})", s.describe()),
            PropertySource::Composed { side, inner } => write!(f, "Composed({side:?}, {inner:?})"),
            PropertySource::Stored(v) => write!(f, "Stored({} values)", v.len()),
            PropertySource::Dynamic(d) => write!(f, "Dynamic({})", d.describe()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PropertyType {
    pub name: String,
    pub owner: NodeTypeId,
    pub kind: ValueKind,
    /// Meaningful only for list kinds.
    pub ordered: bool,
    pub source: PropertySource,
}

#[derive(Clone)]
pub struct EdgeType {
    pub name: String,
    pub source: NodeTypeId,
    pub destination: NodeTypeId,
    pub sensors: Vec<EdgeSensor>,
}

#[derive(Clone)]
pub enum EdgeSensor {
    Matching(Arc<dyn MatchingSensor>),
    Generating(Arc<dyn GeneratingSensor>),
}

impl EdgeSensor {
    pub fn describe(&self) -> String {
        match self {
            EdgeSensor::Matching(s) => s.describe(),
            EdgeSensor::Generating(s) => s.describe(),
        }
    }
}

impl fmt::Debug for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EdgeType")
            .field("name", &self.name)
            .field("source", &self.source)
            .field("destination", &self.destination)
            .field("sensors", &self.sensors.iter().map(|s| s.describe()).collect::<Vec<_>>())
            .finish()
    }
}

/// Frozen schema. Cheap to clone; immutable apart from the properties an
/// [`InstanceGraph`] appends when predictions are written back.
#[derive(Debug, Clone, Default)]
pub struct Schema {
    nodes: Vec<NodeType>,
    properties: Vec<PropertyType>,
    edges: Vec<EdgeType>,
    node_index: HashMap<String, NodeTypeId>,
    edge_index: HashMap<String, EdgeTypeId>,
    property_index: HashMap<(NodeTypeId, String), PropertyId>,
}

impl Schema {
    pub fn node_types(&self) -> impl Iterator<Item = (NodeTypeId, &NodeType)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeTypeId(i), n))
    }

    pub fn edge_types(&self) -> impl Iterator<Item = (EdgeTypeId, &EdgeType)> {
        self.edges.iter().enumerate().map(|(i, e)| (EdgeTypeId(i), e))
    }

    pub fn properties(&self) -> impl Iterator<Item = (PropertyId, &PropertyType)> {
        self.properties.iter().enumerate().map(|(i, p)| (PropertyId(i), p))
    }

    pub fn properties_of(&self, node: NodeTypeId) -> impl Iterator<Item = (PropertyId, &PropertyType)> {
        self.properties().filter(move |(_, p)| p.owner == node)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_type(&self, name: &str) -> Option<NodeTypeId> {
        self.node_index.get(name).copied()
    }

    pub fn edge_type(&self, name: &str) -> Option<EdgeTypeId> {
        self.edge_index.get(name).copied()
    }

    pub fn property_named(&self, owner: NodeTypeId, name: &str) -> Option<PropertyId> {
        self.property_index.get(&(owner, name.to_string())).copied()
    }

    pub fn node(&self, id: NodeTypeId) -> &NodeType {
        &self.nodes[id.0]
    }

    pub fn edge(&self, id: EdgeTypeId) -> &EdgeType {
        &self.edges[id.0]
    }

    pub fn property(&self, id: PropertyId) -> &PropertyType {
        &self.properties[id.0]
    }

    pub fn node_name(&self, id: NodeTypeId) -> &str {
        &self.nodes[id.0].name
    }

    pub fn require_node(&self, name: &str) -> Result<NodeTypeId, SchemaError> {
        self.node_type(name).ok_or_else(|| SchemaError::UnknownNodeType(name.to_string()))
    }

    pub fn require_edge(&self, name: &str) -> Result<EdgeTypeId, SchemaError> {
        self.edge_type(name).ok_or_else(|| SchemaError::UnknownEdgeType(name.to_string()))
    }

    pub fn require_property(&self, owner: NodeTypeId, name: &str) -> Result<PropertyId, SchemaError> {
        self.property_named(owner, name).ok_or_else(|| SchemaError::UnknownProperty {
            node: self.node_name(owner).to_string(),
            property: name.to_string(),
        })
    }

    /// Registers a property after freeze. Used for prediction write-back.
    pub(crate) fn push_property(&mut self, prop: PropertyType) -> Result<PropertyId, SchemaError> {
        let key = (prop.owner, prop.name.clone());
        if self.property_index.contains_key(&key) {
            return Err(SchemaError::DuplicateName { what: "property", name: prop.name });
        }
        let id = PropertyId(self.properties.len());
        self.property_index.insert(key, id);
        self.properties.push(prop);
        Ok(id)
    }

    /// Registers a composed node type after freeze, forwarding every
    /// property of both members under `left_`/`right_` prefixed names.
    pub(crate) fn push_composed(
        &mut self,
        name: &str,
        left: NodeTypeId,
        right: NodeTypeId,
    ) -> Result<NodeTypeId, SchemaError> {
        if self.node_index.contains_key(name) {
            return Err(SchemaError::DuplicateName { what: "node type", name: name.to_string() });
        }
        let id = NodeTypeId(self.nodes.len());
        self.nodes.push(NodeType { name: name.to_string(), kind: NodeKind::Composed { left, right } });
        self.node_index.insert(name.to_string(), id);
        self.forward_composed_properties(id, left, right)?;
        Ok(id)
    }

    fn forward_composed_properties(
        &mut self,
        id: NodeTypeId,
        left: NodeTypeId,
        right: NodeTypeId,
    ) -> Result<(), SchemaError> {
        for (side, member) in [(Side::Left, left), (Side::Right, right)] {
            let inner: Vec<(PropertyId, PropertyType)> = self
                .properties_of(member)
                .map(|(pid, p)| (pid, p.clone()))
                .collect();
            for (pid, p) in inner {
                self.push_property(PropertyType {
                    name: format!("{}{}", side.prefix(), p.name),
                    owner: id,
                    kind: p.kind,
                    ordered: p.ordered,
                    source: PropertySource::Composed { side, inner: pid },
                })?;
            }
        }
        Ok(())
    }

    fn canonical(&self) -> CanonicalSchema {
        let node_name = |id: NodeTypeId| self.nodes[id.0].name.clone();
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                let kind = match n.kind {
                    NodeKind::Atomic => None,
                    NodeKind::Composed { left, right } => Some((node_name(left), node_name(right))),
                };
                (n.name.clone(), kind)
            })
            .collect();
        let properties = self
            .properties
            .iter()
            .map(|p| {
                (
                    node_name(p.owner),
                    p.name.clone(),
                    p.kind.to_string(),
                    p.ordered,
                    p.source.describe(self),
                )
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .map(|e| {
                (
                    e.name.clone(),
                    node_name(e.source),
                    node_name(e.destination),
                    e.sensors.iter().map(EdgeSensor::describe).collect(),
                )
            })
            .collect();
        CanonicalSchema { nodes, properties, edges }
    }
}

type CanonicalProperty = (String, String, String, bool, String);
type CanonicalEdge = (String, String, String, Vec<String>);

#[derive(PartialEq)]
struct CanonicalSchema {
    nodes: BTreeSet<(String, Option<(String, String)>)>,
    properties: BTreeSet<CanonicalProperty>,
    edges: BTreeSet<CanonicalEdge>,
}

/// Schemas compare with set semantics on their types; only each edge's
/// sensor list is order sensitive.
impl PartialEq for Schema {
    fn eq(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }
}

/// Mutable schema under construction.
#[derive(Default)]
pub struct SchemaBuilder {
    schema: Schema,
}

impl SchemaBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn declare_node(&mut self, name: &str) -> Result<NodeTypeId, SchemaError> {
        self.insert_node(name, NodeKind::Atomic)
    }

    /// Declares the node type housing join results of `left` × `right`.
    /// Without an explicit name the type is called `left×right`.
    pub fn declare_composed_node(
        &mut self,
        name: Option<&str>,
        left: &str,
        right: &str,
    ) -> Result<NodeTypeId, SchemaError> {
        let l = self.schema.require_node(left)?;
        let r = self.schema.require_node(right)?;
        let name = name.map(str::to_string).unwrap_or_else(|| format!("{left}×{right}"));
        self.insert_node(&name, NodeKind::Composed { left: l, right: r })
    }

    fn insert_node(&mut self, name: &str, kind: NodeKind) -> Result<NodeTypeId, SchemaError> {
        if self.schema.node_index.contains_key(name) {
            return Err(SchemaError::DuplicateName { what: "node type", name: name.to_string() });
        }
        let id = NodeTypeId(self.schema.nodes.len());
        self.schema.nodes.push(NodeType { name: name.to_string(), kind });
        self.schema.node_index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn declare_property(
        &mut self,
        owner: &str,
        name: &str,
        kind: ValueKind,
        ordered: bool,
        sensor: Sensor,
    ) -> Result<PropertyId, SchemaError> {
        let owner_id = self.schema.require_node(owner)?;
        let sensor = match sensor {
            Sensor::Property(s) => s,
            other => {
                return Err(SchemaError::ModeMismatch {
                    sensor: other.describe(),
                    expected: "property",
                    found: other.mode(),
                })
            }
        };
        match sensor.output() {
            SensorOutput::Any => {}
            SensorOutput::AnyList if kind.is_list() => {}
            SensorOutput::Exact(k) if k == kind => {}
            produced => {
                return Err(SchemaError::KindMismatch {
                    property: name.to_string(),
                    declared: kind,
                    produced: produced.to_string(),
                })
            }
        }
        if let Some(expected) = sensor.input_type() {
            if expected != owner {
                return Err(SchemaError::SignatureMismatch {
                    sensor: sensor.describe(),
                    expected,
                    found: owner.to_string(),
                });
            }
        }
        self.schema.push_property(PropertyType {
            name: name.to_string(),
            owner: owner_id,
            kind,
            ordered: ordered && kind.is_list(),
            source: PropertySource::Sensor(sensor),
        })
    }

    pub fn declare_edge(
        &mut self,
        name: &str,
        source: &str,
        destination: &str,
    ) -> Result<EdgeTypeId, SchemaError> {
        let s = self.schema.require_node(source)?;
        let d = self.schema.require_node(destination)?;
        if self.schema.edge_index.contains_key(name) {
            return Err(SchemaError::DuplicateName { what: "edge type", name: name.to_string() });
        }
        let id = EdgeTypeId(self.schema.edges.len());
        self.schema.edges.push(EdgeType {
            name: name.to_string(),
            source: s,
            destination: d,
            sensors: Vec::new(),
        });
        self.schema.edge_index.insert(name.to_string(), id);
        Ok(id)
    }

    /// Attaches a matching or generating sensor to a declared edge.
    pub fn add_sensor(&mut self, edge: &str, sensor: Sensor) -> Result<EdgeTypeId, SchemaError> {
        let id = self.schema.require_edge(edge)?;
        let (src, dst) = {
            let e = &self.schema.edges[id.0];
            (self.schema.node_name(e.source).to_string(), self.schema.node_name(e.destination).to_string())
        };
        let check = |expected: Option<String>, found: &str, name: String| match expected {
            Some(t) if t != found => Err(SchemaError::SignatureMismatch {
                sensor: name,
                expected: t,
                found: found.to_string(),
            }),
            _ => Ok(()),
        };
        let bound = match sensor {
            Sensor::Matching(m) => {
                let sig = m.signature();
                check(sig.input, &src, m.describe())?;
                check(sig.output, &dst, m.describe())?;
                EdgeSensor::Matching(m)
            }
            Sensor::Generating(g) => {
                let sig = g.signature();
                check(sig.input, &src, g.describe())?;
                check(sig.output, &dst, g.describe())?;
                EdgeSensor::Generating(g)
            }
            Sensor::Property(p) => {
                return Err(SchemaError::ModeMismatch {
                    sensor: p.describe(),
                    expected: "matching or generating",
                    found: SensorMode::Property,
                })
            }
        };
        self.schema.edges[id.0].sensors.push(bound);
        Ok(id)
    }

    /// Validates sensor bindings that depend on the whole schema and
    /// forwards member properties onto composed node types.
    pub fn freeze(mut self) -> Result<Schema, SchemaError> {
        let composed: Vec<(NodeTypeId, NodeTypeId, NodeTypeId)> = self
            .schema
            .node_types()
            .filter_map(|(id, n)| match n.kind {
                NodeKind::Composed { left, right } => Some((id, left, right)),
                NodeKind::Atomic => None,
            })
            .collect();
        for (id, left, right) in composed {
            self.schema.forward_composed_properties(id, left, right)?;
        }
        for (_, p) in self.schema.properties() {
            if let PropertySource::Sensor(s) = &p.source {
                s.validate(&self.schema, p.owner, p.kind)?;
            }
        }
        Ok(self.schema)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::builtin_sensors;
    use crate::value::ScalarKind;

    fn sensor(spec: &str) -> Sensor {
        builtin_sensors().resolve(spec).unwrap()
    }

    #[test]
    fn declare_node_rejects_duplicates() {
        let mut b = SchemaBuilder::new();
        let genes = b.declare_node("genes").unwrap();
        assert_eq!(b.schema().node_name(genes), "genes");
        assert!(matches!(b.declare_node("genes"), Err(SchemaError::DuplicateName { .. })));
        b.declare_node("patients").unwrap();
        assert_eq!(b.schema().node_count(), 2);
    }

    #[test]
    fn declare_property_checks_owner_mode_and_kind() {
        let mut b = SchemaBuilder::new();
        b.declare_node("patientDrug").unwrap();
        b.declare_node("gene").unwrap();
        b.declare_property("patientDrug", "drugResponse", ValueKind::REAL, false, sensor("attr(response)"))
            .unwrap();
        b.declare_property("gene", "KEGG", ValueKind::List(ScalarKind::Text), false, sensor("const_list(pathways)"))
            .unwrap();
        assert!(matches!(
            b.declare_property("gene", "KEGG", ValueKind::List(ScalarKind::Text), false, sensor("attr(x)")),
            Err(SchemaError::DuplicateName { .. })
        ));
        assert!(matches!(
            b.declare_property("gene", "bad", ValueKind::REAL, false, sensor("const_list(x)")),
            Err(SchemaError::KindMismatch { .. })
        ));
        assert!(matches!(
            b.declare_property("gene", "bad", ValueKind::REAL, false, sensor("key_eq(a, b)")),
            Err(SchemaError::ModeMismatch { .. })
        ));
        assert!(matches!(
            b.declare_property("nowhere", "p", ValueKind::REAL, false, sensor("attr(x)")),
            Err(SchemaError::UnknownNodeType(_))
        ));
    }

    #[test]
    fn declare_edge_and_sensors() {
        let mut b = SchemaBuilder::new();
        b.declare_node("geneGene").unwrap();
        b.declare_node("genes").unwrap();
        b.declare_edge("geneGenes", "geneGene", "genes").unwrap();
        assert!(matches!(
            b.declare_edge("geneGenes", "geneGene", "genes"),
            Err(SchemaError::DuplicateName { .. })
        ));
        assert!(matches!(
            b.declare_edge("other", "geneGene", "proteins"),
            Err(SchemaError::UnknownNodeType(_))
        ));
        b.add_sensor("geneGenes", sensor("key_eq(gene1, id)")).unwrap();
        assert!(matches!(
            b.add_sensor("geneGenes", sensor("attr(x)")),
            Err(SchemaError::ModeMismatch { .. })
        ));
        let schema = b.freeze().unwrap();
        assert_eq!(schema.edge(schema.edge_type("geneGenes").unwrap()).sensors.len(), 1);
    }

    #[test]
    fn schema_equality_ignores_declaration_order() {
        let build = |order: &[&str]| {
            let mut b = SchemaBuilder::new();
            for n in order {
                b.declare_node(n).unwrap();
            }
            b.declare_edge("ab", "a", "b").unwrap();
            b.add_sensor("ab", sensor("key_eq(x, y)")).unwrap();
            b.add_sensor("ab", sensor("key_eq(y, x)")).unwrap();
            b.declare_property("a", "p", ValueKind::INT, false, sensor("attr(p)")).unwrap();
            b.freeze().unwrap()
        };
        assert_eq!(build(&["a", "b", "c"]), build(&["c", "b", "a"]));

        let mut b = SchemaBuilder::new();
        b.declare_node("a").unwrap();
        b.declare_node("b").unwrap();
        b.declare_node("c").unwrap();
        b.declare_edge("ab", "a", "b").unwrap();
        b.add_sensor("ab", sensor("key_eq(y, x)")).unwrap();
        b.add_sensor("ab", sensor("key_eq(x, y)")).unwrap();
        b.declare_property("a", "p", ValueKind::INT, false, sensor("attr(p)")).unwrap();
        assert_ne!(b.freeze().unwrap(), build(&["a", "b", "c"]));
    }

    #[test]
    fn composed_nodes_forward_member_properties() {
        let mut b = SchemaBuilder::new();
        b.declare_node("words").unwrap();
        b.declare_property("words", "posTag", ValueKind::TEXT, false, sensor("attr(pos)")).unwrap();
        let pair = b.declare_composed_node(None, "words", "words").unwrap();
        let schema = b.freeze().unwrap();
        assert_eq!(schema.node_name(pair), "words×words");
        assert!(schema.property_named(pair, "left_posTag").is_some());
        assert!(schema.property_named(pair, "right_posTag").is_some());
    }
}
