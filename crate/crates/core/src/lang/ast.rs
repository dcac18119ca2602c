//! Query syntax tree and its canonical printed form.

use std::fmt;

use crate::query::{Aggregate, CmpOp};
use crate::value::Value;

/// Byte range plus the 1-based line and column of its start.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

/// A node with its source location. Equality ignores the location.
#[derive(Debug, Clone)]
pub struct Spanned<T> {
    pub node: T,
    pub span: Span,
}

impl<T> Spanned<T> {
    pub fn new(node: T, span: Span) -> Self {
        Self { node, span }
    }

    pub fn bare(node: T) -> Self {
        Self { node, span: Span::default() }
    }
}

impl<T: PartialEq> PartialEq for Spanned<T> {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Str(String),
    Int(i64),
    Real(f64),
    Bool(bool),
}

impl Literal {
    pub fn to_value(&self) -> Value {
        match self {
            Literal::Str(s) => Value::Text(s.clone()),
            Literal::Int(i) => Value::Int(*i),
            Literal::Real(r) => Value::Real(*r),
            Literal::Bool(b) => Value::Bool(*b),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stage {
    Traverse { edge: String, reverse: bool },
    Prop(String),
    Filter { prop: String, op: CmpOp, literal: Literal },
    NeighborAt { n: u64, edges: Option<Vec<String>> },
    NeighborWithin { n: u64, edges: Option<Vec<String>> },
    Path { target: String, max: Option<u64> },
    GroupBy { key: String, value: String },
    Aggregate(Aggregate),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub node: String,
    pub id: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub source: Spanned<Source>,
    pub stages: Vec<Spanned<Stage>>,
}

/// Builder for queries without going through text.
impl Query {
    pub fn from_node(node: &str) -> Self {
        Self { source: Spanned::bare(Source { node: node.to_string(), id: None }), stages: Vec::new() }
    }

    pub fn from_instance(node: &str, id: &str) -> Self {
        Self {
            source: Spanned::bare(Source { node: node.to_string(), id: Some(id.to_string()) }),
            stages: Vec::new(),
        }
    }

    pub fn stage(mut self, stage: Stage) -> Self {
        self.stages.push(Spanned::bare(stage));
        self
    }

    pub fn traverse(self, edge: &str) -> Self {
        self.stage(Stage::Traverse { edge: edge.to_string(), reverse: false })
    }

    pub fn traverse_back(self, edge: &str) -> Self {
        self.stage(Stage::Traverse { edge: edge.to_string(), reverse: true })
    }

    pub fn prop(self, name: &str) -> Self {
        self.stage(Stage::Prop(name.to_string()))
    }

    pub fn filter(self, prop: &str, op: CmpOp, literal: Literal) -> Self {
        self.stage(Stage::Filter { prop: prop.to_string(), op, literal })
    }

    pub fn aggregate(self, agg: Aggregate) -> Self {
        self.stage(Stage::Aggregate(agg))
    }
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Str(s) => f.write_str(&quote(s)),
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Real(r) => write!(f, "{r:?}"),
            Literal::Bool(b) => write!(f, "{b}"),
        }
    }
}

fn write_edges(f: &mut fmt::Formatter<'_>, edges: &Option<Vec<String>>) -> fmt::Result {
    if let Some(edges) = edges {
        write!(f, ", [{}]", edges.join(", "))?;
    }
    Ok(())
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Traverse { edge, reverse } => write!(f, "~> {}{edge}", if *reverse { "-" } else { "" }),
            Stage::Prop(p) => write!(f, "prop {p}"),
            Stage::Filter { prop, op, literal } => write!(f, "filter({prop} {op} {literal})"),
            Stage::NeighborAt { n, edges } => {
                write!(f, "neighborAt({n}")?;
                write_edges(f, edges)?;
                f.write_str(")")
            }
            Stage::NeighborWithin { n, edges } => {
                write!(f, "neighborWithin({n}")?;
                write_edges(f, edges)?;
                f.write_str(")")
            }
            Stage::Path { target, max } => match max {
                Some(m) => write!(f, "path({}, {m})", quote(target)),
                None => write!(f, "path({})", quote(target)),
            },
            Stage::GroupBy { key, value } => write!(f, "groupBy({key}, {value})"),
            Stage::Aggregate(Aggregate::MkString(sep)) => write!(f, "mkString({})", quote(sep)),
            Stage::Aggregate(a) => f.write_str(a.name()),
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let src = &self.source.node;
        match &src.id {
            Some(id) => write!(f, "{}({})", src.node, quote(id))?,
            None => write!(f, "{}()", src.node)?,
        }
        for stage in &self.stages {
            write!(f, " {}", stage.node)?;
        }
        Ok(())
    }
}
