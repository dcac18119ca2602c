//! The textual query language.
//!
//! ```text
//! query    := source { stage }
//! source   := IDENT "(" [ STRING ] ")"
//! stage    := "~>" [ "-" ] IDENT
//!           | "prop" IDENT
//!           | "filter" "(" IDENT CMP literal ")"
//!           | "neighborAt" "(" INT [ "," edges ] ")"
//!           | "neighborWithin" "(" INT [ "," edges ] ")"
//!           | "path" "(" STRING [ "," INT ] ")"
//!           | "groupBy" "(" IDENT "," IDENT ")"
//!           | agg
//! agg      := "count" | "sum" | "product" | "max" | "min" | "distinct"
//!           | "mkString" "(" STRING ")"
//! CMP      := "==" | "!=" | "<" | "<=" | ">" | ">="
//! edges    := "[" IDENT { "," IDENT } "]"
//! literal  := STRING | [ "-" ] INT | [ "-" ] REAL | "true" | "false"
//! ```
//!
//! Stage keywords are only special in stage position, so they remain valid
//! property and edge names.

mod ast;
mod eval;
mod lexer;
mod parser;
mod typecheck;

use std::fmt;

use thiserror::Error;

pub use ast::{quote, Literal, Query, Source, Span, Spanned, Stage};
pub use eval::{evaluate, evaluate_at, render, QueryResult};
pub use lexer::{Lexer, Token};
pub use parser::parse;
pub use typecheck::{typecheck, typecheck_pivoted, Cardinality, PathTarget, ResultType, TypedQuery, TypedStage};

use crate::graph::{GraphError, InstanceGraph};
use crate::query::QueryError;
use crate::schema::Schema;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub span: Span,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.span.line, self.span.column, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanError {
    pub span: Span,
    pub message: String,
}

impl fmt::Display for PlanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.span.line, self.span.column, self.message)
    }
}

impl std::error::Error for PlanError {}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LangError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("type error at {0}")]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Query(#[from] QueryError),
}

impl From<GraphError> for LangError {
    fn from(e: GraphError) -> Self {
        LangError::Query(QueryError::Graph(e))
    }
}

/// Parses and typechecks `text`.
pub fn compile(text: &str, schema: &Schema) -> Result<TypedQuery, LangError> {
    Ok(typecheck(&parse(text)?, schema)?)
}

/// Parses and typechecks `text` as a query pivoted at a root instance.
pub fn compile_pivoted(text: &str, schema: &Schema) -> Result<TypedQuery, LangError> {
    Ok(typecheck_pivoted(&parse(text)?, schema)?)
}

/// Parses, typechecks and evaluates `text`.
pub fn run(text: &str, graph: &InstanceGraph) -> Result<QueryResult, LangError> {
    evaluate(&compile(text, graph.schema())?, graph)
}
