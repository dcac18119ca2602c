//! Constraint expressions and their textual syntax.
//!
//! ```text
//! expr    := or [ "==>" expr ]
//! or      := and { "or" and }
//! and     := unary { "and" unary }
//! unary   := "not" unary | primary
//! primary := "(" expr ")"
//!          | "forall" IDENT "in" "{" QUERY "}" "(" expr ")"
//!          | IDENT "on" IDENT ( "is" | "isNot" ) STRING
//! ```
//!
//! `QUERY` is query-language text pivoted at the scope instance.

use std::fmt;

use super::ConstraintError;
use crate::lang::{parse, quote, Query};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Is,
    IsNot,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintExpr {
    Atom { classifier: String, var: String, relation: Relation, label: String },
    Not(Box<ConstraintExpr>),
    And(Box<ConstraintExpr>, Box<ConstraintExpr>),
    Or(Box<ConstraintExpr>, Box<ConstraintExpr>),
    Implies(Box<ConstraintExpr>, Box<ConstraintExpr>),
    ForAll { var: String, collection: Query, body: Box<ConstraintExpr> },
}

impl ConstraintExpr {
    pub fn is(classifier: &str, var: &str, label: &str) -> Self {
        ConstraintExpr::Atom {
            classifier: classifier.into(),
            var: var.into(),
            relation: Relation::Is,
            label: label.into(),
        }
    }

    pub fn is_not(classifier: &str, var: &str, label: &str) -> Self {
        ConstraintExpr::Atom {
            classifier: classifier.into(),
            var: var.into(),
            relation: Relation::IsNot,
            label: label.into(),
        }
    }

    pub fn negate(e: ConstraintExpr) -> Self {
        ConstraintExpr::Not(Box::new(e))
    }

    pub fn and(a: ConstraintExpr, b: ConstraintExpr) -> Self {
        ConstraintExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: ConstraintExpr, b: ConstraintExpr) -> Self {
        ConstraintExpr::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: ConstraintExpr, b: ConstraintExpr) -> Self {
        ConstraintExpr::Implies(Box::new(a), Box::new(b))
    }

    pub fn forall(var: &str, collection: Query, body: ConstraintExpr) -> Self {
        ConstraintExpr::ForAll { var: var.into(), collection, body: Box::new(body) }
    }

    /// Classifier names referenced by atoms.
    pub fn classifiers(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let ConstraintExpr::Atom { classifier, .. } = e {
                out.push(classifier.as_str());
            }
        });
        out
    }

    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a ConstraintExpr)) {
        f(self);
        match self {
            ConstraintExpr::Atom { .. } => {}
            ConstraintExpr::Not(e) => e.walk(f),
            ConstraintExpr::And(a, b) | ConstraintExpr::Or(a, b) | ConstraintExpr::Implies(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            ConstraintExpr::ForAll { body, .. } => body.walk(f),
        }
    }
}

impl fmt::Display for ConstraintExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintExpr::Atom { classifier, var, relation, label } => {
                let rel = match relation {
                    Relation::Is => "is",
                    Relation::IsNot => "isNot",
                };
                write!(f, "{classifier} on {var} {rel} {}", quote(label))
            }
            ConstraintExpr::Not(e) => write!(f, "not ({e})"),
            ConstraintExpr::And(a, b) => write!(f, "({a}) and ({b})"),
            ConstraintExpr::Or(a, b) => write!(f, "({a}) or ({b})"),
            ConstraintExpr::Implies(a, b) => write!(f, "({a}) ==> ({b})"),
            ConstraintExpr::ForAll { var, collection, body } => {
                write!(f, "forall {var} in {{ {collection} }} ({body})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Implies,
    LParen,
    RParen,
    /// Raw text between braces.
    Braced(String),
    Eof,
}

fn syntax(offset: usize, message: impl Into<String>) -> ConstraintError {
    ConstraintError::Syntax { offset, message: message.into() }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ConstraintError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let at = |i: usize| chars.get(i).map(|c| c.0).unwrap_or(text.len());
    while i < chars.len() {
        let (off, c) = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push((Tok::LParen, off));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, off));
                i += 1;
            }
            '=' if text[off..].starts_with("==>") => {
                out.push((Tok::Implies, off));
                i += 3;
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(syntax(off, "unterminated string")),
                        Some((_, '"')) => break,
                        Some((_, '\\')) => {
                            match chars.get(i + 1).map(|c| c.1) {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                Some('n') => s.push('\n'),
                                Some('t') => s.push('\t'),
                                Some('r') => s.push('\r'),
                                _ => return Err(syntax(at(i), "bad escape")),
                            }
                            i += 2;
                        }
                        Some((_, ch)) => {
                            s.push(*ch);
                            i += 1;
                        }
                    }
                }
                i += 1;
                out.push((Tok::Str(s), off));
            }
            '{' => {
                // Scan to the matching brace, skipping string literals.
                let start = at(i + 1);
                i += 1;
                let mut in_str = false;
                loop {
                    match chars.get(i).map(|c| c.1) {
                        None => return Err(syntax(off, "unterminated `{`")),
                        Some('\\') if in_str => i += 2,
                        Some('"') => {
                            in_str = !in_str;
                            i += 1;
                        }
                        Some('}') if !in_str => break,
                        Some(_) => i += 1,
                    }
                }
                out.push((Tok::Braced(text[start..at(i)].to_string()), start));
                i += 1;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while chars.get(i).is_some_and(|c| c.1.is_ascii_alphanumeric() || c.1 == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[off..at(i)].to_string()), chars[start].0));
            }
            other => return Err(syntax(off, format!("unexpected character `{other}`"))),
        }
    }
    out.push((Tok::Eof, text.len()));
    Ok(out)
}

/// Parses constraint text.
pub fn parse_constraint(text: &str) -> Result<ConstraintExpr, ConstraintError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let e = p.expr()?;
    match p.peek() {
        Tok::Eof => Ok(e),
        _ => Err(p.error("expected end of constraint")),
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: &str) -> ConstraintError {
        syntax(self.offset(), message)
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self) -> Result<String, ConstraintError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            _ => Err(self.error("expected identifier")),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ConstraintError> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            Err(self.error(&format!("expected {what}")))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ConstraintError> {
        if self.keyword(kw) {
            self.next();
            Ok(())
        } else {
            Err(self.error(&format!("expected `{kw}`")))
        }
    }

    fn expr(&mut self) -> Result<ConstraintExpr, ConstraintError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Implies {
            self.next();
            return Ok(ConstraintExpr::implies(lhs, self.expr()?));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<ConstraintExpr, ConstraintError> {
        let mut e = self.and()?;
        while self.keyword("or") {
            self.next();
            e = ConstraintExpr::or(e, self.and()?);
        }
        Ok(e)
    }

    fn and(&mut self) -> Result<ConstraintExpr, ConstraintError> {
        let mut e = self.unary()?;
        while self.keyword("and") {
            self.next();
            e = ConstraintExpr::and(e, self.unary()?);
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<ConstraintExpr, ConstraintError> {
        if self.keyword("not") {
            self.next();
            return Ok(ConstraintExpr::negate(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<ConstraintExpr, ConstraintError> {
        if *self.peek() == Tok::LParen {
            self.next();
            let e = self.expr()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(e);
        }
        if self.keyword("forall") {
            self.next();
            let var = self.ident()?;
            self.expect_kw("in")?;
            let offset = self.offset();
            let Tok::Braced(text) = self.next() else {
                return Err(syntax(offset, "expected `{ query }`"));
            };
            let collection = parse(&text).map_err(|e| syntax(offset + e.span.start, e.message))?;
            self.expect(Tok::LParen, "`(`")?;
            let body = self.expr()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(ConstraintExpr::forall(&var, collection, body));
        }
        let classifier = self.ident()?;
        self.expect_kw("on")?;
        let var = self.ident()?;
        let relation = if self.keyword("is") {
            Relation::Is
        } else if self.keyword("isNot") {
            Relation::IsNot
        } else {
            return Err(self.error("expected `is` or `isNot`"));
        };
        self.next();
        let offset = self.offset();
        let label = match self.next() {
            Tok::Str(s) => s,
            _ => return Err(syntax(offset, "expected a quoted label")),
        };
        Ok(ConstraintExpr::Atom { classifier, var, relation, label })
    }
}
