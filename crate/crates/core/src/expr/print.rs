use std::fmt::{self, Write};

use num_traits::{One, Signed};

use super::{canon, Expr, Node, Rational};

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        if self.is_canonical() {
            pretty(self, &mut s);
        } else {
            raw(self, &mut s);
        }
        f.write_str(&s)
    }
}

fn rational(q: &Rational, out: &mut String) {
    if q.denom().is_one() {
        write!(out, "{}", q.numer()).unwrap();
    } else {
        write!(out, "{}/{}", q.numer(), q.denom()).unwrap();
    }
}

fn pretty(e: &Expr, out: &mut String) {
    match e.node() {
        Node::Add(ts) => {
            for (idx, t) in ts.iter().enumerate() {
                let (c, m) = canon::split_coeff(t);
                if c.is_negative() {
                    out.push_str(if idx == 0 { "-" } else { " - " });
                } else if idx > 0 {
                    out.push_str(" + ");
                }
                product(&c.abs(), &m, out);
            }
        }
        _ => {
            let (c, m) = canon::split_coeff(e);
            if c.is_negative() {
                out.push('-');
            }
            product(&c.abs(), &m, out);
        }
    }
}

/// Prints `c * m` for a non-negative coefficient and a monomial as a
/// numerator/denominator pair.
fn product(c: &Rational, m: &Expr, out: &mut String) {
    let factors: Vec<Expr> = match m.node() {
        Node::Num(q) if q.is_one() => Vec::new(),
        Node::Mul(fs) => fs.clone(),
        _ => vec![m.clone()],
    };
    let mut numer: Vec<String> = Vec::new();
    let mut denom: Vec<String> = Vec::new();
    // Sums in a denominator are written one by one so that re-parsing does
    // not expand them into a different monic base.
    let mut tail = String::new();
    if !c.numer().is_one() || factors.is_empty() {
        numer.push(c.numer().to_string());
    }
    if !c.denom().is_one() {
        denom.push(c.denom().to_string());
    }
    for f in &factors {
        let (base, n) = match f.node() {
            Node::Pow(b, n) => (b, *n),
            _ => (f, 1),
        };
        if n > 0 {
            numer.push(power(base, n));
        } else if matches!(base.node(), Node::Add(_)) {
            if n == -1 {
                write!(tail, "/{}", power(base, 1)).unwrap();
            } else {
                write!(tail, "*{}^{n}", power(base, 1)).unwrap();
            }
        } else {
            denom.push(power(base, -n));
        }
    }
    if numer.is_empty() {
        numer.push("1".into());
    }
    out.push_str(&numer.join("*"));
    match denom.len() {
        0 => {}
        1 => {
            out.push('/');
            out.push_str(&denom[0]);
        }
        _ => {
            out.push_str("/(");
            out.push_str(&denom.join("*"));
            out.push(')');
        }
    }
    out.push_str(&tail);
}

fn power(base: &Expr, n: i64) -> String {
    let mut s = String::new();
    match base.node() {
        Node::Sym(sym) => write!(s, "{sym}").unwrap(),
        Node::Func(f, a) => {
            s.push_str(f.name());
            s.push('(');
            pretty(a, &mut s);
            s.push(')');
        }
        _ => {
            s.push('(');
            pretty(base, &mut s);
            s.push(')');
        }
    }
    if n != 1 {
        write!(s, "^{n}").unwrap();
    }
    s
}

fn raw(e: &Expr, out: &mut String) {
    let child = |c: &Expr, out: &mut String| match c.node() {
        Node::Sym(_) | Node::Func(..) => raw(c, out),
        Node::Num(q) if !q.is_negative() && q.denom().is_one() => raw(c, out),
        _ => {
            out.push('(');
            raw(c, out);
            out.push(')');
        }
    };
    match e.node() {
        Node::Num(q) => rational(q, out),
        Node::Sym(s) => write!(out, "{s}").unwrap(),
        Node::Func(f, a) => {
            out.push_str(f.name());
            out.push('(');
            raw(a, out);
            out.push(')');
        }
        Node::Pow(b, n) => {
            child(b, out);
            write!(out, "^({n})").unwrap();
        }
        Node::Mul(fs) => {
            for (i, f) in fs.iter().enumerate() {
                if i > 0 {
                    out.push('*');
                }
                child(f, out);
            }
        }
        Node::Add(ts) => {
            for (i, t) in ts.iter().enumerate() {
                if i > 0 {
                    out.push_str(" + ");
                }
                child(t, out);
            }
        }
        Node::Neg(a) => {
            out.push('-');
            child(a, out);
        }
        Node::Div(a, b) => {
            child(a, out);
            out.push('/');
            child(b, out);
        }
    }
}
