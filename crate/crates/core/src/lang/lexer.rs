//! Tokenizer for query text.

use super::ast::Span;
use super::ParseError;
use crate::query::CmpOp;

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    Ident(String),
    Str(String),
    /// Unsigned; the parser applies a preceding `-`.
    Int(u64),
    Real(f64),
    Arrow,
    Minus,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Cmp(CmpOp),
    Eof,
}

impl Token {
    pub fn describe(&self) -> String {
        match self {
            Token::Ident(s) => format!("identifier `{s}`"),
            Token::Str(_) => "string".into(),
            Token::Int(_) => "integer".into(),
            Token::Real(_) => "real".into(),
            Token::Arrow => "`~>`".into(),
            Token::Minus => "`-`".into(),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::LBracket => "`[`".into(),
            Token::RBracket => "`]`".into(),
            Token::Comma => "`,`".into(),
            Token::Cmp(op) => format!("`{op}`"),
            Token::Eof => "end of input".into(),
        }
    }
}

pub struct Lexer<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
    line_start: usize,
}

impl<'a> Lexer<'a> {
    pub fn new(text: &'a str) -> Self {
        Self { text, pos: 0, line: 1, line_start: 0 }
    }

    pub fn tokenize(mut self) -> Result<Vec<(Token, Span)>, ParseError> {
        let mut out = Vec::new();
        loop {
            let (tok, span) = self.next_token()?;
            let eof = tok == Token::Eof;
            out.push((tok, span));
            if eof {
                return Ok(out);
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.text[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.line_start = self.pos;
        }
        Some(c)
    }

    fn span_from(&self, start: usize, line: usize, column: usize) -> Span {
        Span { start, end: self.pos, line, column }
    }

    fn column(&self) -> usize {
        self.text[self.line_start..self.pos].chars().count() + 1
    }

    fn error(&self, start: usize, line: usize, column: usize, message: impl Into<String>) -> ParseError {
        ParseError { span: Span { start, end: self.pos, line, column }, message: message.into(), expected: Vec::new() }
    }

    fn next_token(&mut self) -> Result<(Token, Span), ParseError> {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
        let (start, line, column) = (self.pos, self.line, self.column());
        let Some(c) = self.bump() else {
            return Ok((Token::Eof, self.span_from(start, line, column)));
        };
        let tok = match c {
            '(' => Token::LParen,
            ')' => Token::RParen,
            '[' => Token::LBracket,
            ']' => Token::RBracket,
            ',' => Token::Comma,
            '-' => Token::Minus,
            '~' if self.peek() == Some('>') => {
                self.bump();
                Token::Arrow
            }
            '=' if self.peek() == Some('=') => {
                self.bump();
                Token::Cmp(CmpOp::Eq)
            }
            '!' if self.peek() == Some('=') => {
                self.bump();
                Token::Cmp(CmpOp::Ne)
            }
            '<' | '>' => {
                let eq = self.peek() == Some('=');
                if eq {
                    self.bump();
                }
                Token::Cmp(match (c, eq) {
                    ('<', false) => CmpOp::Lt,
                    ('<', true) => CmpOp::Le,
                    ('>', false) => CmpOp::Gt,
                    _ => CmpOp::Ge,
                })
            }
            '"' => self.string(start, line, column)?,
            c if c.is_ascii_digit() => self.number(start, line, column)?,
            c if c.is_ascii_alphabetic() || c == '_' => {
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    self.bump();
                }
                Token::Ident(self.text[start..self.pos].to_string())
            }
            other => return Err(self.error(start, line, column, format!("unexpected character `{other}`"))),
        };
        Ok((tok, self.span_from(start, line, column)))
    }

    fn string(&mut self, start: usize, line: usize, column: usize) -> Result<Token, ParseError> {
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error(start, line, column, "unterminated string")),
                Some('"') => return Ok(Token::Str(out)),
                Some('\\') => match self.bump() {
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some('r') => out.push('\r'),
                    Some(other) => return Err(self.error(start, line, column, format!("unknown escape `\\{other}`"))),
                    None => return Err(self.error(start, line, column, "unterminated string")),
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn number(&mut self, start: usize, line: usize, column: usize) -> Result<Token, ParseError> {
        let digits = |lx: &mut Self| {
            while lx.peek().is_some_and(|c| c.is_ascii_digit()) {
                lx.bump();
            }
        };
        digits(self);
        let mut real = false;
        if self.peek() == Some('.') && self.peek2().is_some_and(|c| c.is_ascii_digit()) {
            real = true;
            self.bump();
            digits(self);
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let save = (self.pos, self.line, self.line_start);
            self.bump();
            if matches!(self.peek(), Some('+' | '-')) {
                self.bump();
            }
            if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                real = true;
                digits(self);
            } else {
                (self.pos, self.line, self.line_start) = save;
            }
        }
        let text = &self.text[start..self.pos];
        if real {
            let v: f64 = text.parse().map_err(|_| self.error(start, line, column, "malformed real"))?;
            if !v.is_finite() {
                return Err(self.error(start, line, column, "real literal out of range"));
            }
            Ok(Token::Real(v))
        } else {
            text.parse()
                .map(Token::Int)
                .map_err(|_| self.error(start, line, column, "integer literal out of range"))
        }
    }
}
