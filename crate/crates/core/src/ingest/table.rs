//! Delimiter-separated tables, one per node type.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use super::IngestError;
use crate::graph::NodeInstance;
use crate::sensor::DEFAULT_COLUMN_KIND;
use crate::value::{ScalarKind, Value, ValueKind};

/// Separator inside list-valued cells.
pub const LIST_SEPARATOR: char = ';';

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableSource {
    pub path: PathBuf,
    pub delimiter: u8,
}

impl TableSource {
    pub fn csv(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into(), delimiter: b',' }
    }

    pub fn tsv(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into(), delimiter: b'\t' }
    }

    /// Delimiter chosen by extension: `.tsv` is tab separated, anything
    /// else comma separated.
    pub fn from_path(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => Self::tsv(path),
            _ => Self::csv(path),
        }
    }
}

/// Declared kinds of a table's columns; undeclared columns read as text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ColumnKinds {
    kinds: HashMap<String, (ValueKind, bool)>,
}

impl ColumnKinds {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, column: &str, kind: ValueKind, ordered: bool) {
        self.kinds.insert(column.to_string(), (kind, ordered));
    }

    pub fn with(mut self, column: &str, kind: ValueKind) -> Self {
        self.declare(column, kind, false);
        self
    }

    pub fn kind(&self, column: &str) -> (ValueKind, bool) {
        self.kinds.get(column).copied().unwrap_or((ValueKind::Scalar(DEFAULT_COLUMN_KIND), false))
    }
}

fn parse_scalar(kind: ScalarKind, cell: &str) -> Option<Value> {
    match kind {
        ScalarKind::Text => Some(Value::text(cell)),
        ScalarKind::Int => cell.trim().parse().ok().map(Value::Int),
        ScalarKind::Real => cell.trim().parse::<f64>().ok().filter(|r| r.is_finite()).map(Value::Real),
        ScalarKind::Bool => match cell.trim() {
            "true" => Some(Value::Bool(true)),
            "false" => Some(Value::Bool(false)),
            _ => None,
        },
    }
}

/// Parses one cell by its declared kind. An empty list cell is the empty
/// list.
pub fn parse_cell(kind: ValueKind, ordered: bool, cell: &str) -> Option<Value> {
    match kind {
        ValueKind::Scalar(k) => parse_scalar(k, cell),
        ValueKind::List(k) => {
            let items = if cell.is_empty() {
                Vec::new()
            } else {
                cell.split(LIST_SEPARATOR).map(|c| parse_scalar(k, c)).collect::<Option<Vec<_>>>()?
            };
            Value::list(k, ordered, items).ok()
        }
    }
}

/// Reads a table into instances: one per row, the first column is the id.
pub fn read_table(source: &TableSource, kinds: &ColumnKinds) -> Result<Vec<NodeInstance>, IngestError> {
    let file = File::open(&source.path).map_err(|e| IngestError::io(&source.path, e))?;
    read_table_from(file, source.delimiter, kinds, &source.path)
}

/// Reads a table from any reader; `origin` names it in errors.
pub fn read_table_from<R: Read>(
    reader: R,
    delimiter: u8,
    kinds: &ColumnKinds,
    origin: &Path,
) -> Result<Vec<NodeInstance>, IngestError> {
    let file = origin.display().to_string();
    let mut rdr = csv::ReaderBuilder::new().delimiter(delimiter).flexible(true).has_headers(false).from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(IngestError::EmptyTable { file }),
        Some(r) => r.map_err(|e| IngestError::csv(&file, e))?,
    };
    let header: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
    let mut seen = HashSet::new();
    for (i, h) in header.iter().enumerate() {
        if h.is_empty() || !seen.insert(h.as_str()) {
            return Err(IngestError::BadHeader { file, column: i + 1, name: h.clone() });
        }
    }
    let columns: Vec<(ValueKind, bool)> = header.iter().map(|h| kinds.kind(h)).collect();
    let mut ids: HashMap<String, u64> = HashMap::new();
    let mut out = Vec::new();
    for record in records {
        let record = record.map_err(|e| IngestError::csv(&file, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(IngestError::RaggedRow { file, line, expected: header.len(), found: record.len() });
        }
        let id = record[0].trim().to_string();
        if id.is_empty() {
            return Err(IngestError::ParseFailure { file, line, column: header[0].clone(), reason: "empty id".into() });
        }
        if let Some(first) = ids.insert(id.clone(), line) {
            return Err(IngestError::DuplicateId { file, line, id, first });
        }
        let mut inst = NodeInstance::new(id);
        for (c, cell) in record.iter().enumerate().skip(1) {
            let (kind, ordered) = columns[c];
            let value = parse_cell(kind, ordered, cell).ok_or_else(|| IngestError::ParseFailure {
                file: file.clone(),
                line,
                column: header[c].clone(),
                reason: format!("`{cell}` is not a valid {kind}"),
            })?;
            inst.set(&header[c], value);
        }
        out.push(inst);
    }
    Ok(out)
}
