//! Recursive-descent parser for the expression grammar
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' number)?
//! base   := number | 'x' | 't' | 'pi' | fn '(' expr (',' expr)? ')' | '(' expr ')'
//! fn     := abs | exp | sqrt | min | max | bump
//! ```
//!
//! A leading `-` is accepted in `base` and in the exponent.

use std::sync::Arc;

use super::{add, c, div, mul, neg, pow, sub, Node, ScalarField};
use crate::error::{Error, Result};

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { offset: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, ch: u8) -> bool {
        if self.peek() == Some(ch) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, ch: u8) -> Result<()> {
        if self.eat(ch) {
            Ok(())
        } else {
            self.err(format!("expected `{}`", ch as char))
        }
    }

    fn expr(&mut self) -> Result<Arc<Node>> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = add(lhs, self.term()?);
            } else if self.eat(b'-') {
                lhs = sub(lhs, self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Arc<Node>> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = mul(lhs, self.factor()?);
            } else if self.eat(b'/') {
                lhs = div(lhs, self.factor()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Arc<Node>> {
        let base = self.base()?;
        if self.eat(b'^') {
            let n = self.number()?;
            Ok(pow(base, n))
        } else {
            Ok(base)
        }
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        if i < s.len() && (s[i] == b'-' || s[i] == b'+') {
            i += 1;
        }
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'-' || s[j] == b'+') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = std::str::from_utf8(&s[start..i]).unwrap_or("");
        match text.parse::<f64>() {
            Ok(v) => {
                self.pos = i;
                Ok(v)
            }
            Err(_) => self.err("expected a number"),
        }
    }

    fn ident(&mut self) -> &'a str {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn base(&mut self) -> Result<Arc<Node>> {
        match self.peek() {
            None => self.err("unexpected end of input"),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(b'-') => {
                self.pos += 1;
                Ok(neg(self.factor()?))
            }
            Some(ch) if ch.is_ascii_digit() || ch == b'.' => Ok(c(self.number()?)),
            Some(ch) if ch.is_ascii_alphabetic() => {
                let at = self.pos;
                let name = self.ident();
                match name {
                    "x" => Ok(Arc::new(Node::X)),
                    "t" => Ok(Arc::new(Node::T)),
                    "pi" => Ok(Arc::new(Node::Pi)),
                    "abs" | "exp" | "sqrt" | "bump" | "min" | "max" => {
                        self.expect(b'(')?;
                        let a = self.expr()?;
                        let b = if self.eat(b',') { Some(self.expr()?) } else { None };
                        self.expect(b')')?;
                        let node = match (name, b) {
                            ("abs", None) => Node::Abs(a),
                            ("exp", None) => Node::Exp(a),
                            ("sqrt", None) => Node::Sqrt(a),
                            ("bump", None) => Node::Bump(0, a),
                            ("min", Some(b)) => Node::Min(a, b),
                            ("max", Some(b)) => Node::Max(a, b),
                            _ => {
                                self.pos = at;
                                return self.err(format!("wrong number of arguments to `{name}`"));
                            }
                        };
                        Ok(Arc::new(node))
                    }
                    _ => {
                        self.pos = at;
                        self.err(format!("unknown identifier `{name}`"))
                    }
                }
            }
            Some(ch) => self.err(format!("unexpected character `{}`", ch as char)),
        }
    }
}

/// Parses an expression in `x` and `t`.
pub fn parse(src: &str) -> Result<ScalarField> {
    let mut p = Parser { src: src.as_bytes(), pos: 0 };
    let root = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(ScalarField { root })
}
