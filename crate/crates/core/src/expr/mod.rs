//! Symbolic expressions over chart coordinates and named parameters.
//!
//! An [`Expr`] is an immutable, reference-counted tree. Trees produced by the
//! parser are *raw*: they keep `Neg`/`Div` nodes and the operand order of the
//! source text. [`Expr::simplify`] maps any raw tree to the *canonical* form,
//! and every algebraic operation in this crate (arithmetic operators,
//! differentiation, substitution) returns canonical trees.
//!
//! Canonical form:
//! - `Add`/`Mul` children are flattened and sorted by the total node order,
//!   with at least two children, no zero summands and no unit factors;
//! - the only number inside a `Mul` is its leading coefficient;
//! - positive powers of sums are expanded, negative powers of sums are kept
//!   as atoms with a monic base;
//! - `Pow` exponents are integers different from 0 and 1;
//! - positive and negative powers of one base are *not* merged, so `x/x`
//!   stays as it is (see [`Expr::simplify`]);
//! - powers of `sqrt(u)` with `|n| >= 2` are rewritten through `u`.

mod canon;
mod diff;
mod equal;
mod eval;
mod parse;
mod print;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub use equal::{sample_points, Equality, FALLBACK_ABS_FLOOR, FALLBACK_POINTS, FALLBACK_SEED, FALLBACK_TOLERANCE};
pub use eval::{Assignment, Env};
pub use parse::{parse, SymbolTable};
pub(crate) use parse::{is_identifier, is_reserved};

/// Exact rational constants.
pub type Rational = BigRational;

/// Elementary functions available in the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sqrt,
    Sin,
    Cos,
    Exp,
    Log,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Sqrt, Func::Sin, Func::Cos, Func::Exp, Func::Log];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// A symbol that may occur in an expression.
///
/// Indices are zero-based; the textual names are one-based (`q1`, `v1_2`).
/// `Jet` and `Coeff` store their two direction indices sorted, so
/// `w1_2_1` and `w1_1_2` are the same symbol.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    /// A named constant of the model (`sigma`, `tau`, ...).
    Param(Arc<str>),
    /// Base coordinate `q^i`.
    Base(usize),
    /// Fibre coordinate `v^i_alpha`.
    Velocity { i: usize, alpha: usize },
    /// Independent variable `t^alpha` of a section.
    Time(usize),
    /// Second-jet symbol `w^i_{alpha beta}` standing for a second derivative.
    Jet { i: usize, alpha: usize, beta: usize },
    /// Formal SOPDE coefficient `xi^i_{alpha beta}`.
    Coeff { i: usize, alpha: usize, beta: usize },
}

impl Symbol {
    pub fn param(name: &str) -> Symbol {
        Symbol::Param(Arc::from(name))
    }

    pub fn jet(i: usize, alpha: usize, beta: usize) -> Symbol {
        let (alpha, beta) = if alpha <= beta { (alpha, beta) } else { (beta, alpha) };
        Symbol::Jet { i, alpha, beta }
    }

    pub fn coeff(i: usize, alpha: usize, beta: usize) -> Symbol {
        let (alpha, beta) = if alpha <= beta { (alpha, beta) } else { (beta, alpha) };
        Symbol::Coeff { i, alpha, beta }
    }

    /// Coordinates of the chart, as opposed to parameters and auxiliary symbols.
    pub fn is_coordinate(&self) -> bool {
        matches!(self, Symbol::Base(_) | Symbol::Velocity { .. })
    }

    pub fn is_param(&self) -> bool {
        matches!(self, Symbol::Param(_))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Param(name) => write!(f, "{name}"),
            Symbol::Base(i) => write!(f, "q{}", i + 1),
            Symbol::Velocity { i, alpha } => write!(f, "v{}_{}", i + 1, alpha + 1),
            Symbol::Time(alpha) => write!(f, "t{}", alpha + 1),
            Symbol::Jet { i, alpha, beta } => write!(f, "w{}_{}_{}", i + 1, alpha + 1, beta + 1),
            Symbol::Coeff { i, alpha, beta } => write!(f, "xi{}_{}_{}", i + 1, alpha + 1, beta + 1),
        }
    }
}

/// Expression tree node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Num(Rational),
    Sym(Symbol),
    Func(Func, Expr),
    Pow(Expr, i64),
    Mul(Vec<Expr>),
    Add(Vec<Expr>),
    Neg(Expr),
    Div(Expr, Expr),
}

#[derive(Debug)]
struct Inner {
    node: Node,
    canonical: bool,
}

/// Immutable symbolic expression.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("unknown symbol `{name}` at offset {position}")]
    UnknownSymbol { name: String, position: usize },
    #[error("division by a literal zero")]
    DivisionByZeroConstant,
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("domain error: {0}")]
    Domain(String),
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.node == other.0.node
    }
}

impl Eq for Expr {}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return std::cmp::Ordering::Equal;
        }
        self.0.node.cmp(&other.0.node)
    }
}

impl std::hash::Hash for Expr {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.node.hash(state)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Expr {
    pub(crate) fn from_node(node: Node, canonical: bool) -> Expr {
        Expr(Arc::new(Inner { node, canonical }))
    }

    /// Builds a raw node; call [`Expr::simplify`] to canonicalize.
    pub fn raw(node: Node) -> Expr {
        let canonical = matches!(&node, Node::Num(_) | Node::Sym(_));
        Expr::from_node(node, canonical)
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub fn is_canonical(&self) -> bool {
        self.0.canonical
    }

    pub fn num(q: Rational) -> Expr {
        Expr::from_node(Node::Num(q), true)
    }

    pub fn int(n: i64) -> Expr {
        Expr::num(Rational::from_integer(BigInt::from(n)))
    }

    pub fn rational(numer: i64, denom: i64) -> Expr {
        assert!(denom != 0, "zero denominator");
        Expr::num(Rational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn sym(s: Symbol) -> Expr {
        Expr::from_node(Node::Sym(s), true)
    }

    pub fn q(i: usize) -> Expr {
        Expr::sym(Symbol::Base(i))
    }

    pub fn v(i: usize, alpha: usize) -> Expr {
        Expr::sym(Symbol::Velocity { i, alpha })
    }

    pub fn param(name: &str) -> Expr {
        Expr::sym(Symbol::param(name))
    }

    pub fn func(f: Func, arg: &Expr) -> Expr {
        canon::func(f, arg.canon())
    }

    pub fn sqrt(&self) -> Expr {
        Expr::func(Func::Sqrt, self)
    }

    pub fn sin(&self) -> Expr {
        Expr::func(Func::Sin, self)
    }

    pub fn cos(&self) -> Expr {
        Expr::func(Func::Cos, self)
    }

    pub fn exp(&self) -> Expr {
        Expr::func(Func::Exp, self)
    }

    pub fn ln(&self) -> Expr {
        Expr::func(Func::Log, self)
    }

    /// Canonical sum of canonical (or canonicalizable) summands.
    pub fn sum<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        canon::add_all(items.into_iter().map(|e| e.canon()))
    }

    /// Canonical product.
    pub fn product<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        canon::mul_all(items.into_iter().map(|e| e.canon()))
    }

    /// Integer power; fails only for negative powers of a literal zero.
    pub fn powi(&self, n: i64) -> Result<Expr, ExprError> {
        canon::pow(self.canon(), n)
    }

    /// Quotient `self / other`; fails when `other` is the literal zero.
    pub fn checked_div(&self, other: &Expr) -> Result<Expr, ExprError> {
        let inv = canon::pow(other.canon(), -1)?;
        Ok(canon::mul_all([self.canon(), inv]))
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self.node() {
            Node::Num(q) => Some(q),
            _ => None,
        }
    }

    /// True for the canonical literal zero. Raw trees are canonicalized first.
    pub fn is_zero(&self) -> bool {
        matches!(self.canon().node(), Node::Num(q) if q.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self.canon().node(), Node::Num(q) if q.is_one())
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.canon().node(), Node::Num(_))
    }

    /// Canonical form of the expression.
    ///
    /// Numeric subtrees are folded exactly. Symbolic quotients such as
    /// `sigma/sigma` are left alone: a base raised to a positive and a
    /// negative power is kept as two factors. Fails with
    /// [`ExprError::DivisionByZeroConstant`] when a denominator folds to the
    /// literal zero.
    pub fn simplify(&self) -> Result<Expr, ExprError> {
        if self.is_canonical() {
            return Ok(self.clone());
        }
        canon::simplify(self)
    }

    /// Canonical form of a tree known to be valid.
    ///
    /// # Panics
    /// Panics if a raw tree contains a denominator that folds to zero.
    pub fn canon(&self) -> Expr {
        if self.is_canonical() {
            self.clone()
        } else {
            self.simplify().expect("expression has a literal zero denominator")
        }
    }

    /// Rebuilds the canonical form from the leaves up, ignoring the cached
    /// canonical flag. Used to test idempotence of the builders.
    pub fn rebuild(&self) -> Result<Expr, ExprError> {
        canon::simplify(&self.clone_raw())
    }

    fn clone_raw(&self) -> Expr {
        let node = match self.node() {
            Node::Num(_) | Node::Sym(_) => return self.clone(),
            Node::Func(f, a) => Node::Func(*f, a.clone_raw()),
            Node::Pow(b, n) => Node::Pow(b.clone_raw(), *n),
            Node::Mul(fs) => Node::Mul(fs.iter().map(Expr::clone_raw).collect()),
            Node::Add(ts) => Node::Add(ts.iter().map(Expr::clone_raw).collect()),
            Node::Neg(a) => Node::Neg(a.clone_raw()),
            Node::Div(a, b) => Node::Div(a.clone_raw(), b.clone_raw()),
        };
        Expr::from_node(node, false)
    }

    /// All symbols occurring in the expression.
    pub fn free_symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        match self.node() {
            Node::Num(_) => {}
            Node::Sym(s) => {
                out.insert(s.clone());
            }
            Node::Func(_, a) | Node::Pow(a, _) | Node::Neg(a) => a.collect_symbols(out),
            Node::Mul(xs) | Node::Add(xs) => xs.iter().for_each(|x| x.collect_symbols(out)),
            Node::Div(a, b) => {
                a.collect_symbols(out);
                b.collect_symbols(out);
            }
        }
    }

    pub fn depends_on(&self, s: &Symbol) -> bool {
        match self.node() {
            Node::Num(_) => false,
            Node::Sym(t) => t == s,
            Node::Func(_, a) | Node::Pow(a, _) | Node::Neg(a) => a.depends_on(s),
            Node::Mul(xs) | Node::Add(xs) => xs.iter().any(|x| x.depends_on(s)),
            Node::Div(a, b) => a.depends_on(s) || b.depends_on(s),
        }
    }

    /// True if some symbol satisfies `pred`.
    pub fn any_symbol(&self, pred: &dyn Fn(&Symbol) -> bool) -> bool {
        match self.node() {
            Node::Num(_) => false,
            Node::Sym(t) => pred(t),
            Node::Func(_, a) | Node::Pow(a, _) | Node::Neg(a) => a.any_symbol(pred),
            Node::Mul(xs) | Node::Add(xs) => xs.iter().any(|x| x.any_symbol(pred)),
            Node::Div(a, b) => a.any_symbol(pred) || b.any_symbol(pred),
        }
    }

    /// Replaces symbols by expressions and re-canonicalizes.
    pub fn try_substitute(&self, map: &dyn Fn(&Symbol) -> Option<Expr>) -> Result<Expr, ExprError> {
        canon::substitute(&self.canon(), map)
    }

    /// Like [`Expr::try_substitute`].
    ///
    /// # Panics
    /// Panics if the substitution creates a negative power of zero.
    pub fn substitute(&self, map: &dyn Fn(&Symbol) -> Option<Expr>) -> Expr {
        self.try_substitute(map).expect("substitution divides by zero")
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Num(_) | Node::Sym(_) => 1,
            Node::Func(_, a) | Node::Pow(a, _) | Node::Neg(a) => 1 + a.size(),
            Node::Mul(xs) | Node::Add(xs) => 1 + xs.iter().map(Expr::size).sum::<usize>(),
            Node::Div(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Summands of a canonical expression (the expression itself if it is not a sum).
    pub fn terms(&self) -> Vec<Expr> {
        let c = self.canon();
        match c.node() {
            Node::Add(ts) => ts.clone(),
            Node::Num(q) if q.is_zero() => Vec::new(),
            _ => vec![c],
        }
    }

    /// Splits a canonical term into its rational coefficient and the rest.
    pub fn split_coefficient(&self) -> (Rational, Expr) {
        canon::split_coeff(&self.canon())
    }

    pub fn is_negative_term(&self) -> bool {
        self.split_coefficient().0.is_negative()
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.canon(), rhs.canon())
            }
        }
        impl std::ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                (&self).$method(&rhs)
            }
        }
        impl std::ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                (&self).$method(rhs)
            }
        }
        impl std::ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| canon::add_all([a, b]));
binop!(Sub, sub, |a, b| canon::add_all([a, canon::mul_all([Expr::int(-1), b])]));
binop!(Mul, mul, |a, b| canon::mul_all([a, b]));

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        canon::mul_all([Expr::int(-1), self.canon()])
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl From<Symbol> for Expr {
    fn from(s: Symbol) -> Expr {
        Expr::sym(s)
    }
}
