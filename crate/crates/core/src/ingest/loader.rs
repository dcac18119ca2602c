//! Builds and seals an instance graph from a schema document and a data
//! directory.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{BuiltSchema, SchemaConfig};
use super::table::{read_table, ColumnKinds, TableSource};
use super::IngestError;
use crate::graph::{InstanceGraph, InstanceRef, PopulationReport};
use crate::sensor::SensorRegistry;

/// Files behind one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub schema: PathBuf,
    pub data: PathBuf,
    pub learners: Vec<PathBuf>,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(schema: impl Into<PathBuf>, data: impl Into<PathBuf>) -> Self {
        Self { schema: schema.into(), data: data.into(), learners: Vec::new(), seed: 42 }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        for p in [&self.schema].into_iter().chain(&self.learners) {
            if !p.is_file() {
                return Err(IngestError::MissingFile(p.clone()));
            }
        }
        if !self.data.is_dir() {
            return Err(IngestError::MissingFile(self.data.clone()));
        }
        Ok(())
    }
}

/// Table file of `node` inside `dir`, `.csv` preferred over `.tsv`.
pub fn table_for(dir: &Path, node: &str) -> Result<TableSource, IngestError> {
    let csv = dir.join(format!("{node}.csv"));
    if csv.is_file() {
        return Ok(TableSource::from_path(csv));
    }
    let tsv = dir.join(format!("{node}.tsv"));
    if tsv.is_file() {
        return Ok(TableSource::from_path(tsv));
    }
    Err(IngestError::MissingFile(csv))
}

#[derive(Debug)]
pub struct Loaded {
    pub graph: InstanceGraph,
    pub report: PopulationReport,
}

/// Reads every table of `built` from `dir` in declaration order, populates
/// and seals the graph.
pub fn load_built(built: &BuiltSchema, dir: &Path) -> Result<Loaded, IngestError> {
    let mut graph = InstanceGraph::new(built.schema.clone());
    let mut report = PopulationReport::default();
    let empty = ColumnKinds::new();
    for node in &built.tabled {
        let source = table_for(dir, node)?;
        let rows = read_table(&source, built.columns.get(node).unwrap_or(&empty))?;
        report.merge(&graph.populate_named(node, rows)?);
    }
    graph.seal();
    Ok(Loaded { graph, report })
}

pub fn load(schema: &Path, dir: &Path, registry: &SensorRegistry) -> Result<Loaded, IngestError> {
    let built = SchemaConfig::from_file(schema)?.build(registry)?;
    load_built(&built, dir)
}

/// Seeded train/test split. Both sides are non-empty when there are at
/// least two roots.
pub fn split(roots: &[InstanceRef], train_fraction: f64, seed: u64) -> (Vec<InstanceRef>, Vec<InstanceRef>) {
    let mut shuffled = roots.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = shuffled.len();
    let mut k = (train_fraction * n as f64).round() as usize;
    if n >= 2 {
        k = k.clamp(1, n - 1);
    }
    let test = shuffled.split_off(k.min(n));
    (shuffled, test)
}
