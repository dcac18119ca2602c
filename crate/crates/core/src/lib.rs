//! Typed heterogeneous graphs built from tables by sensors, a traversal
//! query language over them, and linear learners whose features are
//! queries.

pub mod constraint;
pub mod graph;
pub mod ingest;
pub mod lang;
pub mod learn;
pub mod query;
pub mod schema;
pub mod sensor;
pub mod value;

pub use graph::{Direction, GraphError, InstanceGraph, InstanceRef, NodeInstance, PopulationReport};
pub use query::{InstanceSet, JoinSet, PathResult, QueryError, ValueSequence};
pub use schema::{EdgeTypeId, NodeTypeId, PropertyId, Schema, SchemaBuilder, SchemaError};
pub use sensor::{builtin_sensors, Sensor, SensorError, SensorRegistry};
pub use value::{ScalarKind, Value, ValueKind};
