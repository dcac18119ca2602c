//! The populated instance graph.
//!
//! Every edge record is stored twice, once in the forward adjacency of its
//! source and once in the reverse adjacency of its destination, so both
//! traversal directions are index lookups. Population fires the schema's
//! edge sensors; matching sensors are evaluated incrementally so the final
//! edge set does not depend on the order in which node batches arrive.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::query::JoinSet;
use crate::schema::{
    DynamicProperty, EdgeSensor, EdgeTypeId, NodeKind, NodeTypeId, PropertyId, PropertySource,
    PropertyType, Schema, SchemaError,
};
use crate::sensor::{join_key, GeneratingSensor, MatchingSensor, SensorContext, SensorError};
use crate::value::{Value, ValueKind};

/// Generated instances may themselves generate, down to this many levels.
pub const MAX_GENERATION_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error("node type `{node}` cannot be populated: {reason}")]
    TypeMismatch { node: String, reason: String },
    #[error("duplicate instance id `{id}` for node type `{node}`")]
    DuplicateInstanceId { node: String, id: String },
    #[error("generating sensors cascaded deeper than {MAX_GENERATION_DEPTH} levels at `{node}`")]
    GenerationDepthExceeded { node: String },
    #[error("graph is sealed; no further population")]
    Sealed,
    #[error("unknown instance `{id}` of node type `{node}`")]
    UnknownInstance { node: String, id: String },
    #[error("property `{property}` belongs to `{owner}`, not `{found}`")]
    OwnerMismatch { property: String, owner: String, found: String },
    #[error("predicted values for `{property}` mix kinds {first} and {other}")]
    MixedPrediction { property: String, first: ValueKind, other: ValueKind },
}

/// A base-type record: an id plus named attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeInstance {
    id: String,
    attributes: BTreeMap<String, Value>,
    members: Option<(InstanceRef, InstanceRef)>,
}

impl NodeInstance {
    pub fn new(id: impl Into<String>) -> Self {
        Self { id: id.into(), attributes: BTreeMap::new(), members: None }
    }

    pub fn with(mut self, name: impl Into<String>, value: impl Into<Value>) -> Self {
        self.attributes.insert(name.into(), value.into());
        self
    }

    pub fn set(&mut self, name: impl Into<String>, value: impl Into<Value>) {
        self.attributes.insert(name.into(), value.into());
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn attribute(&self, name: &str) -> Option<&Value> {
        self.attributes.get(name)
    }

    pub fn attributes(&self) -> &BTreeMap<String, Value> {
        &self.attributes
    }

    /// An attribute, falling back to the instance id for the name `id`.
    pub fn field(&self, name: &str) -> Option<Cow<'_, Value>> {
        match self.attributes.get(name) {
            Some(v) => Some(Cow::Borrowed(v)),
            None if name == "id" => Some(Cow::Owned(Value::Text(self.id.clone()))),
            None => None,
        }
    }

    /// The joined pair, for instances of composed node types.
    pub fn members(&self) -> Option<(InstanceRef, InstanceRef)> {
        self.members
    }
}

/// Handle to a stored instance: its node type and insertion index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstanceRef {
    pub node: NodeTypeId,
    pub index: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Forward,
    Reverse,
}

/// Counts of what one `populate` call added.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PopulationReport {
    pub added: usize,
    pub generated: usize,
    pub edges: usize,
    pub generated_by_type: BTreeMap<String, usize>,
    pub edges_by_type: BTreeMap<String, usize>,
}

impl PopulationReport {
    pub fn merge(&mut self, other: &PopulationReport) {
        self.added += other.added;
        self.generated += other.generated;
        self.edges += other.edges;
        for (k, v) in &other.generated_by_type {
            *self.generated_by_type.entry(k.clone()).or_default() += v;
        }
        for (k, v) in &other.edges_by_type {
            *self.edges_by_type.entry(k.clone()).or_default() += v;
        }
    }
}

#[derive(Default)]
struct NodeStore {
    instances: Vec<NodeInstance>,
    by_id: HashMap<String, u32>,
}

#[derive(Default)]
struct EdgeStore {
    forward: Vec<Vec<u32>>,
    reverse: Vec<Vec<u32>>,
    present: HashSet<(u32, u32)>,
    records: Vec<(u32, u32)>,
}

impl EdgeStore {
    fn insert(&mut self, u: u32, v: u32) -> bool {
        if !self.present.insert((u, v)) {
            return false;
        }
        grow(&mut self.forward, u)[u as usize].push(v);
        grow(&mut self.reverse, v)[v as usize].push(u);
        self.records.push((u, v));
        true
    }

    fn undo(&mut self, u: u32, v: u32) {
        self.forward[u as usize].pop();
        self.reverse[v as usize].pop();
        self.present.remove(&(u, v));
        self.records.pop();
    }
}

fn grow(lists: &mut Vec<Vec<u32>>, at: u32) -> &mut Vec<Vec<u32>> {
    if lists.len() <= at as usize {
        lists.resize_with(at as usize + 1, Vec::new);
    }
    lists
}

/// Undo log for one `populate` call.
struct Journal {
    node_lens: Vec<usize>,
    edges: Vec<(EdgeTypeId, u32, u32)>,
}

pub struct InstanceGraph {
    schema: Schema,
    nodes: Vec<NodeStore>,
    edges: Vec<EdgeStore>,
    memo: RwLock<HashMap<(PropertyId, InstanceRef), Value>>,
    sealed: bool,
}

impl fmt::Debug for InstanceGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (id, n) in self.schema.node_types() {
            m.entry(&n.name, &self.nodes[id.0].instances.len());
        }
        m.finish()
    }
}

impl InstanceGraph {
    pub fn new(schema: Schema) -> Self {
        let nodes = (0..schema.node_count()).map(|_| NodeStore::default()).collect();
        let edges = (0..schema.edge_count()).map(|_| EdgeStore::default()).collect();
        Self { schema, nodes, edges, memo: RwLock::new(HashMap::new()), sealed: false }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// Ends the population phase. Write-back of predictions and joins
    /// remains possible.
    pub fn seal(&mut self) {
        self.sealed = true;
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    pub fn instances(&self, node: NodeTypeId) -> &[NodeInstance] {
        &self.nodes[node.0].instances
    }

    /// All instances of the named node type, in insertion order.
    pub fn instances_of(&self, name: &str) -> Result<&[NodeInstance], GraphError> {
        let node = self.schema.require_node(name)?;
        Ok(self.instances(node))
    }

    pub fn refs(&self, node: NodeTypeId) -> impl Iterator<Item = InstanceRef> + '_ {
        (0..self.nodes[node.0].instances.len() as u32).map(move |index| InstanceRef { node, index })
    }

    pub fn instance(&self, at: InstanceRef) -> &NodeInstance {
        &self.nodes[at.node.0].instances[at.index as usize]
    }

    pub fn find(&self, node: NodeTypeId, id: &str) -> Option<InstanceRef> {
        self.nodes[node.0].by_id.get(id).map(|&index| InstanceRef { node, index })
    }

    pub fn require(&self, node: NodeTypeId, id: &str) -> Result<InstanceRef, GraphError> {
        self.find(node, id).ok_or_else(|| GraphError::UnknownInstance {
            node: self.schema.node_name(node).to_string(),
            id: id.to_string(),
        })
    }

    pub fn contains(&self, at: InstanceRef) -> bool {
        at.node.0 < self.nodes.len() && (at.index as usize) < self.nodes[at.node.0].instances.len()
    }

    pub fn instance_count(&self) -> usize {
        self.nodes.iter().map(|n| n.instances.len()).sum()
    }

    /// Adjacent instance indexes over one edge type.
    pub fn neighbors(&self, edge: EdgeTypeId, dir: Direction, at: InstanceRef) -> &[u32] {
        let store = &self.edges[edge.0];
        let lists = match dir {
            Direction::Forward => &store.forward,
            Direction::Reverse => &store.reverse,
        };
        lists.get(at.index as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Edge records of one type as (source index, destination index), in
    /// insertion order.
    pub fn edge_records(&self, edge: EdgeTypeId) -> &[(u32, u32)] {
        &self.edges[edge.0].records
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(|e| e.records.len()).sum()
    }

    pub fn populate_named(&mut self, node: &str, instances: Vec<NodeInstance>) -> Result<PopulationReport, GraphError> {
        let node = self.schema.require_node(node)?;
        self.populate(node, instances)
    }

    /// Appends a batch of instances and fires every edge sensor they touch.
    /// On error the graph is left exactly as it was before the call.
    pub fn populate(&mut self, node: NodeTypeId, instances: Vec<NodeInstance>) -> Result<PopulationReport, GraphError> {
        if self.sealed {
            return Err(GraphError::Sealed);
        }
        if let NodeKind::Composed { .. } = self.schema.node(node).kind {
            return Err(GraphError::TypeMismatch {
                node: self.schema.node_name(node).to_string(),
                reason: "composed node types are populated by joins".into(),
            });
        }
        let mut seen = HashSet::new();
        for inst in &instances {
            if self.nodes[node.0].by_id.contains_key(&inst.id) || !seen.insert(inst.id.as_str()) {
                return Err(GraphError::DuplicateInstanceId {
                    node: self.schema.node_name(node).to_string(),
                    id: inst.id.clone(),
                });
            }
        }
        self.memo.get_mut().expect("memo lock").clear();

        let mut journal = Journal {
            node_lens: self.nodes.iter().map(|n| n.instances.len()).collect(),
            edges: Vec::new(),
        };
        let mut report = PopulationReport { added: instances.len(), ..Default::default() };
        let start = self.nodes[node.0].instances.len() as u32;
        for inst in instances {
            self.push_instance(node, inst);
        }
        let end = self.nodes[node.0].instances.len() as u32;
        match self.fire(node, start, end, 0, &mut journal, &mut report) {
            Ok(()) => Ok(report),
            Err(e) => {
                self.rollback(journal);
                Err(e)
            }
        }
    }

    fn push_instance(&mut self, node: NodeTypeId, inst: NodeInstance) -> u32 {
        let store = &mut self.nodes[node.0];
        let index = store.instances.len() as u32;
        store.by_id.insert(inst.id.clone(), index);
        store.instances.push(inst);
        index
    }

    fn rollback(&mut self, journal: Journal) {
        for (edge, u, v) in journal.edges.into_iter().rev() {
            self.edges[edge.0].undo(u, v);
        }
        for (store, len) in self.nodes.iter_mut().zip(journal.node_lens) {
            for inst in store.instances.drain(len..) {
                store.by_id.remove(&inst.id);
            }
        }
    }

    fn link(&mut self, edge: EdgeTypeId, u: u32, v: u32, journal: &mut Journal, report: &mut PopulationReport) {
        if self.edges[edge.0].insert(u, v) {
            journal.edges.push((edge, u, v));
            report.edges += 1;
            *report.edges_by_type.entry(self.schema.edge(edge).name.clone()).or_default() += 1;
        }
    }

    /// Fires sensors for the new instances `start..end` of `node`.
    fn fire(
        &mut self,
        node: NodeTypeId,
        start: u32,
        end: u32,
        depth: usize,
        journal: &mut Journal,
        report: &mut PopulationReport,
    ) -> Result<(), GraphError> {
        if start == end {
            return Ok(());
        }
        for ei in 0..self.schema.edge_count() {
            let edge = EdgeTypeId(ei);
            let (source, destination, sensors) = {
                let e = self.schema.edge(edge);
                (e.source, e.destination, e.sensors.clone())
            };
            for sensor in sensors {
                match sensor {
                    EdgeSensor::Matching(m) => {
                        if source == node || destination == node {
                            self.run_matching(edge, m.as_ref(), node, start, end, journal, report);
                        }
                    }
                    EdgeSensor::Generating(g) if source == node => {
                        self.run_generating(edge, g.as_ref(), start, end, depth, journal, report)?;
                    }
                    EdgeSensor::Generating(_) => {}
                }
            }
        }
        Ok(())
    }

    /// Evaluates a matching sensor on every pair that involves at least one
    /// new instance.
    #[allow(clippy::too_many_arguments)]
    fn run_matching(
        &mut self,
        edge: EdgeTypeId,
        sensor: &dyn MatchingSensor,
        node: NodeTypeId,
        start: u32,
        end: u32,
        journal: &mut Journal,
        report: &mut PopulationReport,
    ) {
        let (source, destination) = {
            let e = self.schema.edge(edge);
            (e.source, e.destination)
        };
        let new = start..end;
        let all_src = 0..self.nodes[source.0].instances.len() as u32;
        let all_dst = 0..self.nodes[destination.0].instances.len() as u32;
        let is_new_src = source == node;
        let is_new_dst = destination == node;

        let mut pairs = Vec::new();
        let outer = if is_new_src && !is_new_dst { new.clone() } else { all_src };
        {
            let src_store = &self.nodes[source.0].instances;
            let dst_store = &self.nodes[destination.0].instances;
            // Destination candidates for a source index.
            let candidates = |u: u32| -> std::ops::Range<u32> {
                if is_new_src && (!is_new_dst || new.contains(&u)) {
                    all_dst.clone()
                } else {
                    new.clone()
                }
            };
            if let Some((sc, dc)) = sensor.key_columns() {
                let index_all = if is_new_src { Some(key_index(dst_store, all_dst.clone(), dc)) } else { None };
                let index_new = if is_new_dst { Some(key_index(dst_store, new.clone(), dc)) } else { None };
                for u in outer {
                    let Some(key) = join_key(&src_store[u as usize], sc) else { continue };
                    let range = candidates(u);
                    let index = if range == all_dst && index_all.is_some() {
                        index_all.as_ref()
                    } else {
                        index_new.as_ref()
                    };
                    if let Some(vs) = index.and_then(|ix| ix.get(&key)) {
                        pairs.extend(vs.iter().map(|&v| (u, v)));
                    }
                }
            } else {
                for u in outer {
                    for v in candidates(u) {
                        if sensor.matches(&src_store[u as usize], &dst_store[v as usize]) {
                            pairs.push((u, v));
                        }
                    }
                }
            }
        }
        for (u, v) in pairs {
            self.link(edge, u, v, journal, report);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn run_generating(
        &mut self,
        edge: EdgeTypeId,
        sensor: &dyn GeneratingSensor,
        start: u32,
        end: u32,
        depth: usize,
        journal: &mut Journal,
        report: &mut PopulationReport,
    ) -> Result<(), GraphError> {
        let (source, destination) = {
            let e = self.schema.edge(edge);
            (e.source, e.destination)
        };
        let first_new = self.nodes[destination.0].instances.len() as u32;
        for u in start..end {
            let generated = sensor.generate(&self.nodes[source.0].instances[u as usize])?;
            for inst in generated {
                let v = match self.nodes[destination.0].by_id.get(&inst.id) {
                    Some(&v) => v,
                    None => {
                        if depth + 1 > MAX_GENERATION_DEPTH {
                            return Err(GraphError::GenerationDepthExceeded {
                                node: self.schema.node_name(destination).to_string(),
                            });
                        }
                        report.generated += 1;
                        *report
                            .generated_by_type
                            .entry(self.schema.node_name(destination).to_string())
                            .or_default() += 1;
                        self.push_instance(destination, inst)
                    }
                };
                self.link(edge, u, v, journal, report);
            }
        }
        let last_new = self.nodes[destination.0].instances.len() as u32;
        self.fire(destination, first_new, last_new, depth + 1, journal, report)
    }

    /// Value of `prop` on the instance `at`. Sensor-backed values are
    /// memoized; stored predictions and dynamic properties are read fresh.
    pub fn property_value(&self, at: InstanceRef, prop: PropertyId) -> Result<Value, GraphError> {
        let def = self.schema.property(prop);
        if def.owner != at.node {
            return Err(GraphError::OwnerMismatch {
                property: def.name.clone(),
                owner: self.schema.node_name(def.owner).to_string(),
                found: self.schema.node_name(at.node).to_string(),
            });
        }
        if !self.contains(at) {
            return Err(GraphError::UnknownInstance {
                node: self.schema.node_name(at.node).to_string(),
                id: format!("#{}", at.index),
            });
        }
        let memoized = def.source.memoized();
        if memoized {
            if let Some(v) = self.memo.read().expect("memo lock").get(&(prop, at)) {
                return Ok(v.clone());
            }
        }
        let instance = self.instance(at);
        let value = match &def.source {
            PropertySource::Sensor(s) => s.compute(&SensorContext {
                graph: self,
                at,
                instance,
                kind: def.kind,
                ordered: def.ordered,
            })?,
            PropertySource::Composed { side, inner } => {
                let (l, r) = instance.members().ok_or_else(|| GraphError::TypeMismatch {
                    node: self.schema.node_name(at.node).to_string(),
                    reason: "instance has no joined members".into(),
                })?;
                let member = match side {
                    crate::schema::Side::Left => l,
                    crate::schema::Side::Right => r,
                };
                self.property_value(member, *inner)?
            }
            PropertySource::Stored(values) => values.get(instance.id()).cloned().ok_or_else(|| {
                SensorError::MissingAttribute { instance: instance.id().to_string(), attribute: def.name.clone() }
            })?,
            PropertySource::Dynamic(d) => d.compute(self, at)?,
        };
        if memoized {
            self.memo.write().expect("memo lock").insert((prop, at), value.clone());
        }
        Ok(value)
    }

    /// Stores predictions as a new queryable property of `node`. The kind is
    /// taken from the values; an empty map yields a `real` property.
    pub fn write_prediction(
        &mut self,
        node: NodeTypeId,
        name: &str,
        values: HashMap<String, Value>,
    ) -> Result<PropertyId, GraphError> {
        if self.schema.property_named(node, name).is_some() {
            return Err(SchemaError::DuplicateName { what: "property", name: name.to_string() }.into());
        }
        let mut ids: Vec<&String> = values.keys().collect();
        ids.sort();
        for id in &ids {
            self.require(node, id)?;
        }
        let kind = ids.first().map(|id| values[*id].kind()).unwrap_or(ValueKind::REAL);
        for id in &ids {
            let other = values[*id].kind();
            if other != kind {
                return Err(GraphError::MixedPrediction { property: name.to_string(), first: kind, other });
            }
        }
        let ordered = ids
            .first()
            .and_then(|id| values[*id].as_list())
            .map(|l| l.ordered())
            .unwrap_or(false);
        Ok(self.schema.push_property(PropertyType {
            name: name.to_string(),
            owner: node,
            kind,
            ordered,
            source: PropertySource::Stored(Arc::new(values)),
        })?)
    }

    /// Registers a property recomputed on every read.
    pub fn add_dynamic_property(
        &mut self,
        node: NodeTypeId,
        name: &str,
        kind: ValueKind,
        source: Arc<dyn DynamicProperty>,
    ) -> Result<PropertyId, GraphError> {
        Ok(self.schema.push_property(PropertyType {
            name: name.to_string(),
            owner: node,
            kind,
            ordered: false,
            source: PropertySource::Dynamic(source),
        })?)
    }

    /// Adds the pairs of a join as instances of a composed node type, named
    /// `left×right` unless `name` is given. An existing composed type with
    /// that name and the same members is extended.
    pub fn materialize_join(&mut self, name: Option<&str>, join: &JoinSet) -> Result<NodeTypeId, GraphError> {
        let (left, right) = (join.left_type(), join.right_type());
        let name = name.map(str::to_string).unwrap_or_else(|| {
            format!("{}×{}", self.schema.node_name(left), self.schema.node_name(right))
        });
        let node = match self.schema.node_type(&name) {
            Some(id) => match self.schema.node(id).kind {
                NodeKind::Composed { left: l, right: r } if l == left && r == right => id,
                _ => {
                    return Err(GraphError::TypeMismatch {
                        node: name,
                        reason: "not a composed type over the joined node types".into(),
                    })
                }
            },
            None => {
                let id = self.schema.push_composed(&name, left, right)?;
                self.nodes.push(NodeStore::default());
                id
            }
        };
        let mut fresh = Vec::with_capacity(join.len());
        for &(l, r) in join.pairs() {
            let id = format!("{}×{}", self.instance(l).id(), self.instance(r).id());
            if self.nodes[node.0].by_id.contains_key(&id) {
                return Err(GraphError::DuplicateInstanceId { node: name, id });
            }
            fresh.push(NodeInstance { id, attributes: BTreeMap::new(), members: Some((l, r)) });
        }
        for inst in fresh {
            self.push_instance(node, inst);
        }
        Ok(node)
    }
}

fn key_index(store: &[NodeInstance], range: std::ops::Range<u32>, column: &str) -> HashMap<String, Vec<u32>> {
    let mut index: HashMap<String, Vec<u32>> = HashMap::new();
    for v in range {
        if let Some(k) = join_key(&store[v as usize], column) {
            index.entry(k).or_default().push(v);
        }
    }
    index
}
