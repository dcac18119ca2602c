//! Attribute and property values.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

/// Scalar kinds a property or list element may take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScalarKind {
    Bool,
    Int,
    Real,
    Text,
}

impl ScalarKind {
    pub fn is_numeric(self) -> bool {
        matches!(self, ScalarKind::Int | ScalarKind::Real)
    }

    pub fn name(self) -> &'static str {
        match self {
            ScalarKind::Bool => "bool",
            ScalarKind::Int => "int",
            ScalarKind::Real => "real",
            ScalarKind::Text => "text",
        }
    }
}

impl fmt::Display for ScalarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Kind of a property value: a scalar or a homogeneous list of scalars.
/// Nested lists are not representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueKind {
    Scalar(ScalarKind),
    List(ScalarKind),
}

impl ValueKind {
    pub const BOOL: ValueKind = ValueKind::Scalar(ScalarKind::Bool);
    pub const INT: ValueKind = ValueKind::Scalar(ScalarKind::Int);
    pub const REAL: ValueKind = ValueKind::Scalar(ScalarKind::Real);
    pub const TEXT: ValueKind = ValueKind::Scalar(ScalarKind::Text);

    /// The scalar kind of the value or of its list elements.
    pub fn element(self) -> ScalarKind {
        match self {
            ValueKind::Scalar(k) | ValueKind::List(k) => k,
        }
    }

    pub fn is_list(self) -> bool {
        matches!(self, ValueKind::List(_))
    }

    /// Parses `bool`, `int`, `real`, `text` and `list<k>`.
    pub fn parse(text: &str) -> Option<ValueKind> {
        let text = text.trim();
        if let Some(inner) = text.strip_prefix("list<").and_then(|s| s.strip_suffix('>')) {
            return parse_scalar_kind(inner.trim()).map(ValueKind::List);
        }
        parse_scalar_kind(text).map(ValueKind::Scalar)
    }
}

fn parse_scalar_kind(text: &str) -> Option<ScalarKind> {
    match text {
        "bool" => Some(ScalarKind::Bool),
        "int" => Some(ScalarKind::Int),
        "real" => Some(ScalarKind::Real),
        "text" => Some(ScalarKind::Text),
        _ => None,
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueKind::Scalar(k) => write!(f, "{k}"),
            ValueKind::List(k) => write!(f, "list<{k}>"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValueError {
    #[error("list element of kind {found} in a list of {expected}")]
    MixedList { expected: ScalarKind, found: ValueKind },
}

/// A property or attribute value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Real(f64),
    Text(String),
    List(ValueList),
}

/// Homogeneous list of scalar values. `ordered` marks lists whose element
/// positions carry meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueList {
    kind: ScalarKind,
    ordered: bool,
    items: Vec<Value>,
}

impl ValueList {
    pub fn new(kind: ScalarKind, ordered: bool, items: Vec<Value>) -> Result<Self, ValueError> {
        for item in &items {
            let found = item.kind();
            if found != ValueKind::Scalar(kind) {
                return Err(ValueError::MixedList { expected: kind, found });
            }
        }
        Ok(Self { kind, ordered, items })
    }

    pub fn kind(&self) -> ScalarKind {
        self.kind
    }

    pub fn ordered(&self) -> bool {
        self.ordered
    }

    pub fn items(&self) -> &[Value] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn with_ordered(mut self, ordered: bool) -> Self {
        self.ordered = ordered;
        self
    }
}

impl Value {
    pub fn text(s: impl Into<String>) -> Value {
        Value::Text(s.into())
    }

    /// Builds a list value, checking element homogeneity.
    pub fn list(kind: ScalarKind, ordered: bool, items: Vec<Value>) -> Result<Value, ValueError> {
        ValueList::new(kind, ordered, items).map(Value::List)
    }

    pub fn text_list<I, S>(items: I) -> Value
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Value::List(ValueList {
            kind: ScalarKind::Text,
            ordered: false,
            items: items.into_iter().map(|s| Value::Text(s.into())).collect(),
        })
    }

    pub fn real_list(items: impl IntoIterator<Item = f64>, ordered: bool) -> Value {
        Value::List(ValueList {
            kind: ScalarKind::Real,
            ordered,
            items: items.into_iter().map(Value::Real).collect(),
        })
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Bool(_) => ValueKind::BOOL,
            Value::Int(_) => ValueKind::INT,
            Value::Real(_) => ValueKind::REAL,
            Value::Text(_) => ValueKind::TEXT,
            Value::List(l) => ValueKind::List(l.kind),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&ValueList> {
        match self {
            Value::List(l) => Some(l),
            _ => None,
        }
    }

    /// Whether this value may be stored under a property of kind `kind`.
    pub fn conforms_to(&self, kind: ValueKind) -> bool {
        self.kind() == kind
    }

    /// Equality used for grouping and `distinct`: reals compare by bit
    /// pattern so that the relation is an equivalence.
    pub fn same(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Real(a), Value::Real(b)) => a.to_bits() == b.to_bits(),
            (Value::List(a), Value::List(b)) => {
                a.kind == b.kind
                    && a.items.len() == b.items.len()
                    && a.items.iter().zip(&b.items).all(|(x, y)| x.same(y))
            }
            _ => self == other,
        }
    }

    /// Comparison between two scalars of compatible kind. Int and Real
    /// compare numerically; other kind pairs are incomparable.
    pub fn compare(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => Some(a.cmp(b)),
            (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
            (Value::Text(a), Value::Text(b)) => Some(a.cmp(b)),
            (a, b) => match (a.as_f64(), b.as_f64()) {
                (Some(x), Some(y)) => x.partial_cmp(&y),
                _ => None,
            },
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Text(s) => f.write_str(s),
            Value::List(l) => {
                for (i, item) in l.items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{item}")?;
                }
                Ok(())
            }
        }
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<f64> for Value {
    fn from(r: f64) -> Self {
        Value::Real(r)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}
