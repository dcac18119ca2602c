//! TOML schema and learner configuration documents.
//!
//! A schema document lists `[[node]]`, `[[edge]]` and `[[property]]`
//! tables:
//!
//! ```toml
//! [[node]]
//! name = "patients"
//!
//! [[edge]]
//! name = "drugsOfPatient"
//! source = "patients"
//! destination = "patientDrug"
//! sensors = ["key_eq(id, pid)"]
//!
//! [[property]]
//! node = "patientDrug"
//! name = "response"
//! kind = "real"
//! sensor = "attr(response)"
//! ```
//!
//! A node may set `compose = ["left", "right"]` to house join results.
//! Atomic nodes that are not the destination of a generating edge are read
//! from `<data>/<name>.csv` (or `.tsv`).
//!
//! A learner document holds `[[learner]]` tables, an optional `[family]`
//! templated over one learner and an optional `[constrained]` section.
//! Family parameters are listed, drawn from a query, or both:
//!
//! ```toml
//! [family]
//! template = "drugResponse"
//! source = "genes() prop KEGG"
//! ```

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::table::ColumnKinds;
use super::IngestError;
use crate::graph::InstanceGraph;
use crate::lang::{self, QueryResult};
use crate::constraint::{handle, parse_constraint, ClassifierHandle, ConstrainedClassifier};
use crate::learn::{LearnableSpec, Learner, SgdConfig, Task};
use crate::schema::{Schema, SchemaBuilder};
use crate::sensor::{parse_call, SensorMode, SensorRegistry};
use crate::value::{Value, ValueKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compose: Option<[String; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeConfig {
    pub name: String,
    pub source: String,
    pub destination: String,
    #[serde(default)]
    pub sensors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertyConfig {
    pub node: String,
    pub name: String,
    pub kind: String,
    pub sensor: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ordered: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaConfig {
    #[serde(default, rename = "node")]
    pub nodes: Vec<NodeConfig>,
    #[serde(default, rename = "edge")]
    pub edges: Vec<EdgeConfig>,
    #[serde(default, rename = "property")]
    pub properties: Vec<PropertyConfig>,
}

/// A frozen schema plus what the loader needs to read its tables.
#[derive(Debug, Clone)]
pub struct BuiltSchema {
    pub schema: Schema,
    /// Node types read from tables, in declaration order.
    pub tabled: Vec<String>,
    pub columns: BTreeMap<String, ColumnKinds>,
}

fn parse_toml<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T, IngestError> {
    toml::from_str(text).map_err(|e| IngestError::Config { file: origin.to_string(), reason: e.to_string() })
}

fn read_text(path: &Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|e| IngestError::io(path, e))
}

impl SchemaConfig {
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        parse_toml(text, "<schema>")
    }

    pub fn from_file(path: &Path) -> Result<Self, IngestError> {
        parse_toml(&read_text(path)?, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("schema config serializes")
    }

    pub fn build(&self, registry: &SensorRegistry) -> Result<BuiltSchema, IngestError> {
        let mut b = SchemaBuilder::new();
        for n in &self.nodes {
            match &n.compose {
                None => b.declare_node(&n.name)?,
                Some([l, r]) => b.declare_composed_node(Some(&n.name), l, r)?,
            };
        }
        let mut generated = HashSet::new();
        for e in &self.edges {
            b.declare_edge(&e.name, &e.source, &e.destination)?;
            for s in &e.sensors {
                let sensor = registry.resolve(s).map_err(|err| IngestError::sensor(&e.name, err))?;
                if sensor.mode() == SensorMode::Generating {
                    generated.insert(e.destination.clone());
                }
                b.add_sensor(&e.name, sensor)?;
            }
        }
        let mut columns: BTreeMap<String, ColumnKinds> = BTreeMap::new();
        for p in &self.properties {
            let kind = ValueKind::parse(&p.kind).ok_or_else(|| IngestError::Config {
                file: "<schema>".into(),
                reason: format!("property `{}.{}` has unknown kind `{}`", p.node, p.name, p.kind),
            })?;
            let sensor = registry.resolve(&p.sensor).map_err(|err| IngestError::sensor(&p.name, err))?;
            b.declare_property(&p.node, &p.name, kind, p.ordered, sensor)?;
            if let Ok((name, args)) = parse_call(&p.sensor) {
                if (name == "attr" || name == "const_list") && args.len() == 1 {
                    columns.entry(p.node.clone()).or_default().declare(&args[0], kind, p.ordered);
                }
            }
        }
        let schema = b.freeze()?;
        let tabled = self
            .nodes
            .iter()
            .filter(|n| n.compose.is_none() && !generated.contains(&n.name))
            .map(|n| n.name.clone())
            .collect();
        Ok(BuiltSchema { schema, tabled, columns })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub name: String,
    pub root: String,
    pub label: String,
    pub features: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<String>,
    #[serde(default)]
    pub sgd: SgdConfig,
}

/// Placeholder replaced by each family parameter.
pub const PARAM_PLACEHOLDER: &str = "{param}";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    /// Name of the `[[learner]]` used as the template.
    pub template: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parameters: Vec<String>,
    /// Query whose distinct values are appended to `parameters`, sorted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl FamilyConfig {
    /// The family's parameters: the listed ones, then any new values of
    /// `source`. List values contribute each element.
    pub fn resolve(&self, graph: &InstanceGraph) -> Result<Vec<String>, IngestError> {
        let mut out = self.parameters.clone();
        let Some(text) = &self.source else { return Ok(out) };
        let result = lang::run(text, graph).map_err(|e| IngestError::Learn(e.into()))?;
        let mut found = BTreeSet::new();
        let mut add = |v: &Value| match v {
            Value::List(l) => found.extend(l.items().iter().map(|i| i.to_string())),
            v => {
                found.insert(v.to_string());
            }
        };
        match &result {
            QueryResult::Scalar(v) => add(v),
            QueryResult::Values(seq) => seq.values().iter().for_each(add),
            QueryResult::Instances(set) => found.extend(set.ids(graph).into_iter().map(str::to_string)),
            _ => {
                return Err(IngestError::Config {
                    file: "<learners>".into(),
                    reason: format!("family source `{text}` must yield values or instances"),
                })
            }
        }
        for p in found {
            if !out.contains(&p) {
                out.push(p);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BindConfig {
    pub classifier: String,
    pub property: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locate_scope: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstrainedConfig {
    pub scope: String,
    #[serde(default = "default_scope_var")]
    pub scope_var: String,
    pub decision: String,
    pub classifiers: Vec<String>,
    #[serde(default)]
    pub constraints: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub bind: Vec<BindConfig>,
}

fn default_scope_var() -> String {
    "scope".into()
}

fn default_fraction() -> f64 {
    0.7
}

fn default_seed() -> u64 {
    42
}

/// A constrained classifier and the handles of its untrained learners.
pub type ConstrainedSetup = (ConstrainedClassifier, Vec<(String, ClassifierHandle)>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningConfig {
    #[serde(default = "default_fraction")]
    pub train_fraction: f64,
    /// Seed of the train/test split.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, rename = "learner")]
    pub learners: Vec<LearnerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constrained: Option<ConstrainedConfig>,
}

impl LearnerConfig {
    pub fn spec(&self, schema: &Schema) -> Result<LearnableSpec, IngestError> {
        self.instantiate(schema, None)
    }

    /// Builds the spec with every `{param}` in its queries replaced.
    pub fn instantiate(&self, schema: &Schema, param: Option<&str>) -> Result<LearnableSpec, IngestError> {
        self.sgd.validate()?;
        let fill = |s: &str| match param {
            Some(p) => s.replace(PARAM_PLACEHOLDER, p),
            None => s.to_string(),
        };
        let features: Vec<String> = self.features.iter().map(|f| fill(f)).collect();
        let refs: Vec<&str> = features.iter().map(String::as_str).collect();
        let name = match param {
            Some(p) => format!("{}[{p}]", self.name),
            None => self.name.clone(),
        };
        let mut spec = LearnableSpec::new(schema, &name, &self.root, &fill(&self.label), &refs, self.task)?;
        if let Some(f) = &self.filter {
            spec = spec.with_filter_query(schema, &fill(f))?;
        }
        Ok(spec.with_sgd(self.sgd))
    }
}

impl LearningConfig {
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let cfg: Self = parse_toml(text, "<learners>")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, IngestError> {
        let cfg: Self = parse_toml(&read_text(path)?, &path.display().to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("learning config serializes")
    }

    fn validate(&self) -> Result<(), IngestError> {
        let bad = |reason: String| IngestError::Config { file: "<learners>".into(), reason };
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(bad(format!("train_fraction must lie in (0, 1), got {}", self.train_fraction)));
        }
        let mut names = HashSet::new();
        for l in &self.learners {
            if !names.insert(l.name.as_str()) {
                return Err(bad(format!("duplicate learner `{}`", l.name)));
            }
        }
        if let Some(f) = &self.family {
            if !names.contains(f.template.as_str()) {
                return Err(bad(format!("family template `{}` is not a declared learner", f.template)));
            }
            if f.parameters.is_empty() && f.source.is_none() {
                return Err(bad("family needs `parameters` or a `source` query".into()));
            }
        }
        if let Some(c) = &self.constrained {
            for name in &c.classifiers {
                if !names.contains(name.as_str()) {
                    return Err(bad(format!("constrained classifier `{name}` is not a declared learner")));
                }
            }
        }
        Ok(())
    }

    pub fn learner(&self, name: &str) -> Option<&LearnerConfig> {
        self.learners.iter().find(|l| l.name == name)
    }

    /// Builds the constrained classifier over freshly created learners,
    /// returning their handles for training.
    pub fn constrained(
        &self,
        schema: &Schema,
    ) -> Result<Option<ConstrainedSetup>, IngestError> {
        let Some(c) = &self.constrained else { return Ok(None) };
        let mut handles = Vec::new();
        for name in &c.classifiers {
            let cfg = self.learner(name).expect("validated");
            handles.push((name.clone(), handle(Learner::new(cfg.spec(schema)?))));
        }
        let constraints = c.constraints.iter().map(|t| parse_constraint(t)).collect::<Result<Vec<_>, _>>()?;
        let cc = ConstrainedClassifier::new(schema, &c.scope, &c.scope_var, &c.decision, handles.clone(), constraints)?
            .with_seed(c.seed);
        Ok(Some((cc, handles)))
    }
}
