//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := factor (('*' | '/') factor)*
//! factor   := ('-' | '+') factor | power
//! power    := atom ('^' exponent)?
//! exponent := ['-'] integer | '(' ['-' | '+'] integer ')'
//! atom     := number | ident | func '(' expr ')' | '(' expr ')'
//! number   := digits ['.' digits] [('e' | 'E') ['+' | '-'] digits]
//! ```
//!
//! Unary minus binds looser than `^`, so `-x^2` is `-(x^2)`.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::Zero;

use super::{Expr, ExprError, Func, Node, Rational, Symbol};

/// Identifiers accepted by the parser.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolTable {
    pub k: usize,
    pub n: usize,
    pub params: BTreeSet<String>,
    /// Accept `t1..tk`.
    pub time: bool,
    /// Accept `w{i}_{a}_{b}`.
    pub jets: bool,
    /// Accept `xi{i}_{a}_{b}`.
    pub coeffs: bool,
}

impl SymbolTable {
    pub fn new(k: usize, n: usize, params: impl IntoIterator<Item = String>) -> Self {
        SymbolTable { k, n, params: params.into_iter().collect(), time: false, jets: false, coeffs: false }
    }

    pub fn with_time(mut self) -> Self {
        self.time = true;
        self
    }

    pub fn with_jets(mut self) -> Self {
        self.jets = true;
        self
    }

    pub fn with_coeffs(mut self) -> Self {
        self.coeffs = true;
        self
    }

    /// Resolves an identifier, or returns `None` if it is not declared.
    pub fn resolve(&self, name: &str) -> Option<Symbol> {
        if self.params.contains(name) {
            return Some(Symbol::param(name));
        }
        let ix = |s: &str, max: usize| -> Option<usize> {
            if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || s.starts_with('0') {
                return None;
            }
            let v: usize = s.parse().ok()?;
            (1..=max).contains(&v).then(|| v - 1)
        };
        if let Some(rest) = name.strip_prefix("xi") {
            if !self.coeffs {
                return None;
            }
            let p = parts(rest, 3)?;
            return Some(Symbol::coeff(ix(p[0], self.n)?, ix(p[1], self.k)?, ix(p[2], self.k)?));
        }
        let (head, rest) = name.split_at(name.chars().next().map_or(0, char::len_utf8));
        match head {
            "q" => Some(Symbol::Base(ix(rest, self.n)?)),
            "v" => {
                let p = parts(rest, 2)?;
                Some(Symbol::Velocity { i: ix(p[0], self.n)?, alpha: ix(p[1], self.k)? })
            }
            "t" if self.time => Some(Symbol::Time(ix(rest, self.k)?)),
            "w" if self.jets => {
                let p = parts(rest, 3)?;
                Some(Symbol::jet(ix(p[0], self.n)?, ix(p[1], self.k)?, ix(p[2], self.k)?))
            }
            _ => None,
        }
    }
}

fn parts(rest: &str, len: usize) -> Option<Vec<&str>> {
    let p: Vec<&str> = rest.split('_').collect();
    (p.len() == len).then_some(p)
}

/// True if `name` has the shape of a coordinate or auxiliary symbol, or is a
/// function name, for any dimensions.
pub(crate) fn is_reserved(name: &str) -> bool {
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    let indexed = |s: &str, len: usize| {
        let p: Vec<&str> = s.split('_').collect();
        p.len() == len && p.iter().all(|x| digits(x))
    };
    if Func::from_name(name).is_some() {
        return true;
    }
    if let Some(rest) = name.strip_prefix("xi") {
        if indexed(rest, 3) {
            return true;
        }
    }
    match name.split_at(name.chars().next().map_or(0, char::len_utf8)) {
        ("q" | "t", rest) => digits(rest),
        ("v", rest) => indexed(rest, 2),
        ("w", rest) => indexed(rest, 3),
        _ => false,
    }
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut cs = name.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses `text` into a raw expression tree.
pub fn parse(text: &str, table: &SymbolTable) -> Result<Expr, ExprError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, table };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("operator or end of input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    table: &'a SymbolTable,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &str) -> ExprError {
        ExprError::Syntax { position: self.pos, expected: expected.to_string() }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                terms.push(Expr::raw(Node::Neg(self.term()?)));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Expr::raw(Node::Add(terms)) })
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut factors = vec![self.factor()?];
        loop {
            if self.eat(b'*') {
                factors.push(self.factor()?);
            } else if self.eat(b'/') {
                let lhs = if factors.len() == 1 { factors.pop().unwrap() } else { Expr::raw(Node::Mul(std::mem::take(&mut factors))) };
                factors.push(Expr::raw(Node::Div(lhs, self.factor()?)));
            } else {
                break;
            }
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { Expr::raw(Node::Mul(factors)) })
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            return Ok(Expr::raw(Node::Neg(self.factor()?)));
        }
        if self.eat(b'+') {
            return self.factor();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let n = if self.eat(b'(') {
            let n = self.signed_int()?;
            if !self.eat(b')') {
                return Err(self.error("`)`"));
            }
            n
        } else {
            self.signed_int()?
        };
        Ok(Expr::raw(Node::Pow(base, n)))
    }

    fn signed_int(&mut self) -> Result<i64, ExprError> {
        let neg = if self.eat(b'-') {
            true
        } else {
            self.eat(b'+');
            false
        };
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("integer exponent"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let n: i64 = text.parse().map_err(|_| ExprError::Syntax { position: start, expected: "exponent within range".into() })?;
        Ok(if neg { -n } else { n })
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("`)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            _ => Err(self.error("number, identifier or `(`")),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            std::str::from_utf8(&p.src[s..p.pos]).unwrap().to_string()
        };
        let int = digits(self);
        let mut frac = String::new();
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            frac = digits(self);
        }
        if int.is_empty() && frac.is_empty() {
            return Err(ExprError::Syntax { position: start, expected: "digits".into() });
        }
        let mut exp: i64 = 0;
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            self.pos += 1;
            let neg = match self.src.get(self.pos) {
                Some(b'-') => {
                    self.pos += 1;
                    true
                }
                Some(b'+') => {
                    self.pos += 1;
                    false
                }
                _ => false,
            };
            let e = digits(self);
            if e.is_empty() {
                return Err(self.error("exponent digits"));
            }
            exp = e.parse().map_err(|_| self.error("exponent within range"))?;
            if neg {
                exp = -exp;
            }
        }
        let mantissa: BigInt = format!("{int}{frac}").parse().unwrap_or_else(|_| BigInt::zero());
        let scale = exp - frac.len() as i64;
        let ten = BigInt::from(10);
        let p = num_traits::pow(ten, scale.unsigned_abs() as usize);
        let q = if scale >= 0 { Rational::from_integer(mantissa * p) } else { Rational::new(mantissa, p) };
        Ok(Expr::num(q))
    }

    fn ident(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if let Some(f) = Func::from_name(name) {
            if !self.eat(b'(') {
                return Err(self.error("`(` after function name"));
            }
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.error("`)`"));
            }
            return Ok(Expr::raw(Node::Func(f, arg)));
        }
        match self.table.resolve(name) {
            Some(s) => Ok(Expr::sym(s)),
            None => Err(ExprError::UnknownSymbol { name: name.to_string(), position: start }),
        }
    }
}
