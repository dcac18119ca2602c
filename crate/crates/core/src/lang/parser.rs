//! Recursive-descent parser for query text.

use super::ast::{Literal, Query, Source, Span, Spanned, Stage};
use super::lexer::{Lexer, Token};
use super::ParseError;
use crate::query::Aggregate;

pub fn parse(text: &str) -> Result<Query, ParseError> {
    let tokens = Lexer::new(text).tokenize()?;
    let mut p = Parser { tokens, pos: 0 };
    let query = p.query()?;
    Ok(query)
}

const STAGE_STARTS: &[&str] = &[
    "`~>`",
    "prop",
    "filter",
    "neighborAt",
    "neighborWithin",
    "path",
    "groupBy",
    "count",
    "sum",
    "product",
    "max",
    "min",
    "distinct",
    "mkString",
];

struct Parser {
    tokens: Vec<(Token, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].1
    }

    fn advance(&mut self) -> (Token, Span) {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let found = self.peek().describe();
        ParseError {
            span: self.span(),
            message: format!("expected {}, found {found}", expected.join(" or ")),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect(&mut self, tok: Token, name: &str) -> Result<Span, ParseError> {
        if *self.peek() == tok {
            Ok(self.advance().1)
        } else {
            Err(self.unexpected(&[name]))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Token::Ident(s) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn string(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Token::Str(s) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => Err(self.unexpected(&["string"])),
        }
    }

    fn int(&mut self) -> Result<u64, ParseError> {
        match self.peek() {
            Token::Int(n) => {
                let n = *n;
                self.advance();
                Ok(n)
            }
            _ => Err(self.unexpected(&["integer"])),
        }
    }

    fn query(&mut self) -> Result<Query, ParseError> {
        let start = self.span();
        let node = self.ident()?;
        self.expect(Token::LParen, "`(`")?;
        let id = match self.peek() {
            Token::Str(_) => Some(self.string()?),
            Token::RParen => None,
            _ => return Err(self.unexpected(&["string", "`)`"])),
        };
        let end = self.expect(Token::RParen, "`)`")?;
        let source = Spanned::new(Source { node, id }, join(start, end));
        let mut stages = Vec::new();
        while *self.peek() != Token::Eof {
            stages.push(self.stage()?);
        }
        Ok(Query { source, stages })
    }

    fn stage(&mut self) -> Result<Spanned<Stage>, ParseError> {
        let start = self.span();
        let stage = match self.peek().clone() {
            Token::Arrow => {
                self.advance();
                let reverse = *self.peek() == Token::Minus;
                if reverse {
                    self.advance();
                }
                Stage::Traverse { edge: self.ident()?, reverse }
            }
            Token::Ident(kw) => {
                self.advance();
                self.keyword_stage(&kw, start)?
            }
            _ => return Err(self.unexpected(STAGE_STARTS)),
        };
        let end = self.tokens[self.pos.saturating_sub(1)].1;
        Ok(Spanned::new(stage, join(start, end)))
    }

    fn keyword_stage(&mut self, kw: &str, at: Span) -> Result<Stage, ParseError> {
        Ok(match kw {
            "prop" => Stage::Prop(self.ident()?),
            "filter" => {
                self.expect(Token::LParen, "`(`")?;
                let prop = self.ident()?;
                let op = match self.peek() {
                    Token::Cmp(op) => *op,
                    _ => return Err(self.unexpected(&["comparison operator"])),
                };
                self.advance();
                let literal = self.literal()?;
                self.expect(Token::RParen, "`)`")?;
                Stage::Filter { prop, op, literal }
            }
            "neighborAt" | "neighborWithin" => {
                self.expect(Token::LParen, "`(`")?;
                let n = self.int()?;
                let edges = if *self.peek() == Token::Comma {
                    self.advance();
                    Some(self.edge_list()?)
                } else {
                    None
                };
                self.expect(Token::RParen, "`)`")?;
                if kw == "neighborAt" {
                    Stage::NeighborAt { n, edges }
                } else {
                    Stage::NeighborWithin { n, edges }
                }
            }
            "path" => {
                self.expect(Token::LParen, "`(`")?;
                let target = self.string()?;
                let max = if *self.peek() == Token::Comma {
                    self.advance();
                    Some(self.int()?)
                } else {
                    None
                };
                self.expect(Token::RParen, "`)`")?;
                Stage::Path { target, max }
            }
            "groupBy" => {
                self.expect(Token::LParen, "`(`")?;
                let key = self.ident()?;
                self.expect(Token::Comma, "`,`")?;
                let value = self.ident()?;
                self.expect(Token::RParen, "`)`")?;
                Stage::GroupBy { key, value }
            }
            "count" => Stage::Aggregate(Aggregate::Count),
            "sum" => Stage::Aggregate(Aggregate::Sum),
            "product" => Stage::Aggregate(Aggregate::Product),
            "max" => Stage::Aggregate(Aggregate::Max),
            "min" => Stage::Aggregate(Aggregate::Min),
            "distinct" => Stage::Aggregate(Aggregate::Distinct),
            "mkString" => {
                self.expect(Token::LParen, "`(`")?;
                let sep = self.string()?;
                self.expect(Token::RParen, "`)`")?;
                Stage::Aggregate(Aggregate::MkString(sep))
            }
            _ => {
                return Err(ParseError {
                    span: at,
                    message: format!("unknown stage `{kw}`"),
                    expected: STAGE_STARTS.iter().map(|s| s.to_string()).collect(),
                })
            }
        })
    }

    fn edge_list(&mut self) -> Result<Vec<String>, ParseError> {
        self.expect(Token::LBracket, "`[`")?;
        let mut edges = vec![self.ident()?];
        while *self.peek() == Token::Comma {
            self.advance();
            edges.push(self.ident()?);
        }
        self.expect(Token::RBracket, "`]`")?;
        Ok(edges)
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        let neg_span = self.span();
        let negative = *self.peek() == Token::Minus;
        if negative {
            self.advance();
        }
        let lit = match self.peek().clone() {
            Token::Str(s) if !negative => Literal::Str(s),
            Token::Ident(s) if !negative && s == "true" => Literal::Bool(true),
            Token::Ident(s) if !negative && s == "false" => Literal::Bool(false),
            Token::Real(r) => Literal::Real(if negative { -r } else { r }),
            Token::Int(n) => {
                let v = if negative {
                    if n == 1u64 << 63 {
                        Some(i64::MIN)
                    } else {
                        i64::try_from(n).ok().map(|v| -v)
                    }
                } else {
                    i64::try_from(n).ok()
                };
                Literal::Int(v.ok_or_else(|| ParseError {
                    span: join(neg_span, self.span()),
                    message: "integer literal out of range".into(),
                    expected: Vec::new(),
                })?)
            }
            _ if negative => return Err(self.unexpected(&["integer", "real"])),
            _ => return Err(self.unexpected(&["string", "integer", "real", "`true`", "`false`"])),
        };
        self.advance();
        Ok(lit)
    }
}

fn join(a: Span, b: Span) -> Span {
    Span { start: a.start, end: b.end.max(a.start), line: a.line, column: a.column }
}
