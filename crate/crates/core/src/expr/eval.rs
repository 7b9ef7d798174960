use std::collections::HashMap;

use num_traits::ToPrimitive;

use super::{Expr, ExprError, Func, Node, Symbol};

/// Source of numeric values for symbols.
pub trait Env {
    fn value(&self, s: &Symbol) -> Option<f64>;
}

impl<F: Fn(&Symbol) -> Option<f64>> Env for F {
    fn value(&self, s: &Symbol) -> Option<f64> {
        self(s)
    }
}

/// A finite map from symbols to values.
#[derive(Debug, Clone, Default)]
pub struct Assignment {
    values: HashMap<Symbol, f64>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, s: Symbol, value: f64) -> &mut Self {
        self.values.insert(s, value);
        self
    }

    pub fn with(mut self, s: Symbol, value: f64) -> Self {
        self.values.insert(s, value);
        self
    }

    pub fn with_param(self, name: &str, value: f64) -> Self {
        self.with(Symbol::param(name), value)
    }

    pub fn get(&self, s: &Symbol) -> Option<f64> {
        self.values.get(s).copied()
    }

    pub fn extend_from(&mut self, other: &Assignment) {
        self.values.extend(other.values.iter().map(|(k, v)| (k.clone(), *v)));
    }
}

impl Env for Assignment {
    fn value(&self, s: &Symbol) -> Option<f64> {
        self.get(s)
    }
}

impl Expr {
    /// Evaluates the expression in double precision.
    pub fn eval(&self, env: &dyn Env) -> Result<f64, ExprError> {
        let x = match self.node() {
            Node::Num(q) => q.to_f64().unwrap_or(f64::NAN),
            Node::Sym(s) => env.value(s).ok_or_else(|| ExprError::UnboundSymbol(s.to_string()))?,
            Node::Func(f, a) => {
                let u = a.eval(env)?;
                match f {
                    Func::Sqrt if u < 0.0 => return Err(ExprError::Domain(format!("sqrt of {u}"))),
                    Func::Sqrt => u.sqrt(),
                    Func::Log if u <= 0.0 => return Err(ExprError::Domain(format!("log of {u}"))),
                    Func::Log => u.ln(),
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Exp => u.exp(),
                }
            }
            Node::Pow(b, n) => {
                let u = b.eval(env)?;
                if u == 0.0 && *n < 0 {
                    return Err(ExprError::Domain("division by zero".into()));
                }
                match i32::try_from(*n) {
                    Ok(m) => u.powi(m),
                    Err(_) => u.powf(*n as f64),
                }
            }
            Node::Mul(fs) => {
                let mut p = 1.0;
                for f in fs {
                    p *= f.eval(env)?;
                }
                p
            }
            Node::Add(ts) => {
                let mut s = 0.0;
                for t in ts {
                    s += t.eval(env)?;
                }
                s
            }
            Node::Neg(a) => -a.eval(env)?,
            Node::Div(a, b) => {
                let d = b.eval(env)?;
                if d == 0.0 {
                    return Err(ExprError::Domain("division by zero".into()));
                }
                a.eval(env)? / d
            }
        };
        if x.is_finite() {
            Ok(x)
        } else {
            Err(ExprError::Domain(format!("non-finite value in `{self}`")))
        }
    }
}
