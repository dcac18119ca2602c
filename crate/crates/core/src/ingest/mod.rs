//! Table readers, configuration documents, the synthetic data generator
//! and the graph loader.

mod config;
mod loader;
mod synth;
mod table;

pub use config::{
    BindConfig, BuiltSchema, ConstrainedConfig, ConstrainedSetup, EdgeConfig, FamilyConfig, LearnerConfig, LearningConfig, NodeConfig,
    PropertyConfig, SchemaConfig, PARAM_PLACEHOLDER,
};
pub use loader::{load, load_built, split, table_for, Loaded, RunConfig};
pub use synth::{
    bio_schema, drug_response_config, gene_name, generate_synthetic_bio, pathway_name, patient_name,
    recompute_response, synthesize, Manifest, SynthData, SynthParams,
};
pub use table::{parse_cell, read_table, read_table_from, ColumnKinds, TableSource, LIST_SEPARATOR};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::constraint::ConstraintError;
use crate::graph::GraphError;
use crate::learn::LearnError;
use crate::schema::SchemaError;
use crate::sensor::SensorError;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("missing file `{}`", .0.display())]
    MissingFile(PathBuf),
    #[error("{file}: {reason}")]
    Csv { file: String, reason: String },
    #[error("{file}: table has no header row")]
    EmptyTable { file: String },
    #[error("{file}: header column {column} `{name}` is empty or repeated")]
    BadHeader { file: String, column: usize, name: String },
    #[error("{file}:{line}: expected {expected} cells, found {found}")]
    RaggedRow { file: String, line: u64, expected: usize, found: usize },
    #[error("{file}:{line}: duplicate id `{id}` (first seen on line {first})")]
    DuplicateId { file: String, line: u64, id: String, first: u64 },
    #[error("{file}:{line}: column `{column}`: {reason}")]
    ParseFailure { file: String, line: u64, column: String, reason: String },
    #[error("{file}: {reason}")]
    Config { file: String, reason: String },
    #[error("`{owner}`: {source}")]
    Sensor { owner: String, source: SensorError },
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

impl IngestError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IngestError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn csv(file: &str, e: csv::Error) -> Self {
        IngestError::Csv { file: file.to_string(), reason: e.to_string() }
    }

    pub(crate) fn sensor(owner: &str, source: SensorError) -> Self {
        IngestError::Sensor { owner: owner.to_string(), source }
    }
}
