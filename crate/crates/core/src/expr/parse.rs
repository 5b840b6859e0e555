//! Recursive-descent parser for
//!
//! ```text
//! expr   := term { ("+"|"-") term }
//! term   := factor { ("*"|"/") factor }
//! factor := base [ "^" integer ]
//! base   := number | ident | ident "(" expr { "," expr } ")" | "(" expr ")" | "-" base
//! ```
//!
//! Unary minus binds tighter than `^`, so `-x^2` is `(-x)^2`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Expression, Func};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("syntax error: unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("syntax error: expected {expected}, found {found}")]
    Unexpected { expected: &'static str, found: String },
    #[error("malformed number {0:?}")]
    BadNumber(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("function `{func}` takes 1 argument, got {got}")]
    Arity { func: &'static str, got: usize },
    #[error("exponent must be an integer literal")]
    NonIntegerExponent,
}

/// Name resolution applied while parsing: named constants are folded to
/// numbers, renames map chart coordinate names onto canonical jet names.
#[derive(Clone, Debug, Default)]
pub struct Scope {
    pub constants: BTreeMap<String, f64>,
    pub renames: BTreeMap<String, String>,
}

impl Scope {
    /// Scope with `pi` bound.
    pub fn standard() -> Scope {
        let mut s = Scope::default();
        s.constants.insert("pi".into(), core::f64::consts::PI);
        s
    }

    pub fn with_constant(mut self, name: &str, value: f64) -> Scope {
        self.constants.insert(name.into(), value);
        self
    }

    pub fn with_rename(mut self, from: &str, to: &str) -> Scope {
        self.renames.insert(from.into(), to.into());
        self
    }
}

pub fn parse(text: &str) -> Result<Expression, ParseError> {
    parse_with(text, &Scope::default())
}

pub fn parse_with(text: &str, scope: &Scope) -> Result<Expression, ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0, end: text.len(), scope };
    let e = p.expr()?;
    match p.peek() {
        None => Ok(e),
        Some((tok, off)) => Err(ParseError {
            offset: off,
            kind: ParseErrorKind::Unexpected { expected: "operator or end of input", found: tok.describe() },
        }),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num { value: f64, integer: bool },
    Ident(String),
    Sym(char),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num { value, .. } => value.to_string(),
            Tok::Ident(s) => s.clone(),
            Tok::Sym(c) => {
                let mut s = String::from("'");
                s.push(*c);
                s.push('\'');
                s
            }
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            let mut integer = true;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                integer = false;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    integer = false;
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s = &text[start..i];
            let value: f64 = s.parse().map_err(|_| ParseError {
                offset: start,
                kind: ParseErrorKind::BadNumber(s.into()),
            })?;
            out.push((Tok::Num { value, integer }, start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].into()), start));
        } else if b"+-*/^(),".contains(&c) {
            out.push((Tok::Sym(c as char), i));
            i += 1;
        } else {
            let ch = text[i..].chars().next().unwrap_or('?');
            return Err(ParseError { offset: i, kind: ParseErrorKind::UnexpectedChar(ch) });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    scope: &'a Scope,
}

impl Parser<'_> {
    fn peek(&self) -> Option<(Tok, usize)> {
        self.tokens.get(self.pos).cloned()
    }

    fn peek_sym(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some((Tok::Sym(c), _)) => Some(*c),
            _ => None,
        }
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.1)
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        let found = self.tokens.get(self.pos).map_or_else(|| "end of input".into(), |t| t.0.describe());
        ParseError { offset: self.offset(), kind: ParseErrorKind::Unexpected { expected, found } }
    }

    fn expect_sym(&mut self, c: char, expected: &'static str) -> Result<(), ParseError> {
        if self.peek_sym() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn expr(&mut self) -> Result<Expression, ParseError> {
        let mut acc = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_sym() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if op == '+' { acc.add(&rhs) } else { acc.sub(&rhs) };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Expression, ParseError> {
        let mut acc = self.factor()?;
        while let Some(op @ ('*' | '/')) = self.peek_sym() {
            self.pos += 1;
            let rhs = self.factor()?;
            acc = if op == '*' { acc.mul(&rhs) } else { acc.div(&rhs) };
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expression, ParseError> {
        let base = self.base()?;
        if self.peek_sym() != Some('^') {
            return Ok(base);
        }
        self.pos += 1;
        let offset = self.offset();
        let negative = match self.peek_sym() {
            Some('-') => {
                self.pos += 1;
                true
            }
            Some('+') => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        let bad = ParseError { offset, kind: ParseErrorKind::NonIntegerExponent };
        match self.peek() {
            Some((Tok::Num { value, integer: true }, _)) if value <= i32::MAX as f64 => {
                self.pos += 1;
                let n = value as i32;
                Ok(base.powi(if negative { -n } else { n }))
            }
            Some(_) => Err(bad),
            None => Err(self.unexpected("integer exponent")),
        }
    }

    fn base(&mut self) -> Result<Expression, ParseError> {
        let Some((tok, offset)) = self.peek() else {
            return Err(self.unexpected("expression"));
        };
        match tok {
            Tok::Num { value, .. } => {
                self.pos += 1;
                Ok(Expression::constant(value))
            }
            Tok::Sym('-') => {
                self.pos += 1;
                Ok(self.base()?.neg())
            }
            Tok::Sym('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(')', "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if self.peek_sym() == Some('(') {
                    self.pos += 1;
                    let mut args = Vec::new();
                    args.push(self.expr()?);
                    while self.peek_sym() == Some(',') {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect_sym(')', "',' or ')'")?;
                    let f = Func::from_name(&name).ok_or(ParseError {
                        offset,
                        kind: ParseErrorKind::UnknownFunction(name.clone()),
                    })?;
                    if args.len() != 1 {
                        return Err(ParseError {
                            offset,
                            kind: ParseErrorKind::Arity { func: f.name(), got: args.len() },
                        });
                    }
                    Ok(Expression::call(f, &args[0]))
                } else if let Some(c) = self.scope.constants.get(&name) {
                    Ok(Expression::constant(*c))
                } else if let Some(target) = self.scope.renames.get(&name) {
                    Ok(Expression::var(target))
                } else {
                    Ok(Expression::var(&name))
                }
            }
            Tok::Sym(_) => Err(self.unexpected("expression")),
        }
    }
}
