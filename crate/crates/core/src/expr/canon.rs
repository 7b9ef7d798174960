use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{Expr, ExprError, Func, Node, Rational, Symbol};

pub(super) fn simplify(e: &Expr) -> Result<Expr, ExprError> {
    if e.is_canonical() {
        return Ok(e.clone());
    }
    Ok(match e.node() {
        Node::Num(_) | Node::Sym(_) => e.clone(),
        Node::Func(f, a) => func(*f, simplify(a)?),
        Node::Pow(b, n) => pow(simplify(b)?, *n)?,
        Node::Mul(fs) => mul_all(fs.iter().map(simplify).collect::<Result<Vec<_>, _>>()?),
        Node::Add(ts) => add_all(ts.iter().map(simplify).collect::<Result<Vec<_>, _>>()?),
        Node::Neg(a) => mul_all([Expr::int(-1), simplify(a)?]),
        Node::Div(a, b) => {
            let inv = pow(simplify(b)?, -1)?;
            mul_all([simplify(a)?, inv])
        }
    })
}

/// Coefficient and monomial of a canonical term.
pub(super) fn split_coeff(term: &Expr) -> (Rational, Expr) {
    match term.node() {
        Node::Num(q) => (q.clone(), Expr::one()),
        Node::Mul(fs) => match fs[0].node() {
            Node::Num(q) => {
                let rest = if fs.len() == 2 {
                    fs[1].clone()
                } else {
                    Expr::from_node(Node::Mul(fs[1..].to_vec()), true)
                };
                (q.clone(), rest)
            }
            _ => (Rational::one(), term.clone()),
        },
        _ => (Rational::one(), term.clone()),
    }
}

fn make_term(c: Rational, m: Expr) -> Expr {
    if c.is_zero() {
        return Expr::zero();
    }
    if m.is_one_node() {
        return Expr::num(c);
    }
    if c.is_one() {
        return m;
    }
    let mut fs = vec![Expr::num(c)];
    match m.node() {
        Node::Mul(ms) => fs.extend(ms.iter().cloned()),
        _ => fs.push(m),
    }
    Expr::from_node(Node::Mul(fs), true)
}

impl Expr {
    fn is_one_node(&self) -> bool {
        matches!(self.node(), Node::Num(q) if q.is_one())
    }
}

pub(super) fn add_all<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
    let mut constant = Rational::zero();
    let mut monomials: BTreeMap<Expr, Rational> = BTreeMap::new();
    let mut push = |t: &Expr, constant: &mut Rational| {
        let (c, m) = split_coeff(t);
        if m.is_one_node() {
            *constant += c;
        } else {
            *monomials.entry(m).or_insert_with(Rational::zero) += c;
        }
    };
    for item in items {
        debug_assert!(item.is_canonical());
        match item.node() {
            Node::Add(ts) => ts.iter().for_each(|t| push(t, &mut constant)),
            _ => push(&item, &mut constant),
        }
    }
    let mut terms = Vec::with_capacity(monomials.len() + 1);
    if !constant.is_zero() {
        terms.push(Expr::num(constant));
    }
    for (m, c) in monomials {
        if !c.is_zero() {
            terms.push(make_term(c, m));
        }
    }
    match terms.len() {
        0 => Expr::zero(),
        1 => terms.pop().unwrap(),
        _ => Expr::from_node(Node::Add(terms), true),
    }
}

/// Factors sharing a key have their exponents added. Bases that mention a
/// parameter keep positive and negative powers apart.
fn power_key(base: &Expr, n: i64) -> (Expr, bool) {
    let separate = n < 0 && base.any_symbol(&Symbol::is_param);
    (base.clone(), separate)
}

pub(super) fn mul_all<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
    let mut coeff = Rational::one();
    let mut powers: BTreeMap<(Expr, bool), i64> = BTreeMap::new();
    let mut sums: Vec<Expr> = Vec::new();

    fn absorb(
        e: &Expr,
        coeff: &mut Rational,
        powers: &mut BTreeMap<(Expr, bool), i64>,
        sums: &mut Vec<Expr>,
    ) {
        debug_assert!(e.is_canonical());
        match e.node() {
            Node::Num(q) => *coeff *= q,
            Node::Mul(fs) => fs.iter().for_each(|f| absorb(f, coeff, powers, sums)),
            Node::Pow(b, n) => *powers.entry(power_key(b, *n)).or_insert(0) += n,
            Node::Add(_) => sums.push(e.clone()),
            _ => *powers.entry(power_key(e, 1)).or_insert(0) += 1,
        }
    }

    for item in items {
        absorb(&item, &mut coeff, &mut powers, &mut sums);
        if coeff.is_zero() {
            return Expr::zero();
        }
    }

    // sqrt(u)^n = u^q * sqrt(u)^r with n = 2q + r, |r| <= 1.
    let mut extra = Vec::new();
    let mut entries = Vec::with_capacity(powers.len());
    for ((base, _), n) in powers {
        if n == 0 {
            continue;
        }
        if let Node::Func(Func::Sqrt, u) = base.node() {
            if n.abs() >= 2 {
                let (q, r) = (n / 2, n % 2);
                extra.push(pow(u.clone(), q).expect("sqrt argument folded to zero"));
                if r != 0 {
                    extra.push(pow_atom(base.clone(), r));
                }
                continue;
            }
        }
        entries.push(pow_atom(base, n));
    }
    if !extra.is_empty() {
        let mut all = entries;
        all.extend(extra);
        all.extend(sums);
        all.push(Expr::num(coeff));
        return mul_all(all);
    }

    entries.sort();
    let monomial = if entries.is_empty() {
        Expr::one()
    } else if entries.len() == 1 {
        entries.pop().unwrap()
    } else {
        Expr::from_node(Node::Mul(entries), true)
    };
    let head = make_term(coeff, monomial);
    if sums.is_empty() {
        return head;
    }
    let mut acc = vec![head];
    for s in &sums {
        let ts = s.terms();
        let mut next = Vec::with_capacity(acc.len() * ts.len());
        for a in &acc {
            for t in &ts {
                next.push(mul_all([a.clone(), t.clone()]));
            }
        }
        acc = next;
    }
    add_all(acc)
}

fn pow_atom(base: Expr, n: i64) -> Expr {
    if n == 1 {
        base
    } else {
        Expr::from_node(Node::Pow(base, n), true)
    }
}

fn rational_pow(q: &Rational, n: i64) -> Result<Rational, ExprError> {
    if q.is_zero() && n < 0 {
        return Err(ExprError::DivisionByZeroConstant);
    }
    let e = u32::try_from(n.unsigned_abs()).expect("exponent too large");
    let p = Rational::new(num_traits::pow(q.numer().clone(), e as usize), num_traits::pow(q.denom().clone(), e as usize));
    Ok(if n < 0 { p.recip() } else { p })
}

pub(super) fn pow(base: Expr, n: i64) -> Result<Expr, ExprError> {
    if n == 0 {
        return Ok(Expr::one());
    }
    if n == 1 {
        return Ok(base);
    }
    Ok(match base.node() {
        Node::Num(q) => Expr::num(rational_pow(q, n)?),
        Node::Mul(fs) => {
            let parts = fs.iter().map(|f| pow(f.clone(), n)).collect::<Result<Vec<_>, _>>()?;
            mul_all(parts)
        }
        Node::Pow(b, m) => pow(b.clone(), m * n)?,
        Node::Add(_) if n > 0 => {
            let mut acc = base.clone();
            for _ in 1..n {
                acc = mul_all([acc, base.clone()]);
            }
            acc
        }
        Node::Add(_) => {
            let (c0, _) = split_coeff(&base.terms()[0]);
            let monic = if c0.is_one() { base.clone() } else { mul_all([Expr::num(c0.recip()), base.clone()]) };
            mul_all([Expr::num(rational_pow(&c0, n)?), pow_atom(monic, n)])
        }
        Node::Func(Func::Sqrt, _) => mul_all([pow_atom(base.clone(), n)]),
        _ => pow_atom(base.clone(), n),
    })
}

fn exact_sqrt(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    (&r * &r == *n).then_some(r)
}

pub(super) fn func(f: Func, arg: Expr) -> Expr {
    debug_assert!(arg.is_canonical());
    if let Node::Num(q) = arg.node() {
        match f {
            Func::Sqrt => {
                if let (Some(a), Some(b)) = (exact_sqrt(q.numer()), exact_sqrt(q.denom())) {
                    return Expr::num(Rational::new(a, b));
                }
            }
            Func::Sin if q.is_zero() => return Expr::zero(),
            Func::Cos | Func::Exp if q.is_zero() => return Expr::one(),
            Func::Log if q.is_one() => return Expr::zero(),
            _ => {}
        }
    }
    Expr::from_node(Node::Func(f, arg), true)
}

pub(super) fn substitute(e: &Expr, map: &dyn Fn(&Symbol) -> Option<Expr>) -> Result<Expr, ExprError> {
    Ok(match e.node() {
        Node::Num(_) => e.clone(),
        Node::Sym(s) => match map(s) {
            Some(r) => r.simplify()?,
            None => e.clone(),
        },
        Node::Func(f, a) => func(*f, substitute(a, map)?),
        Node::Pow(b, n) => pow(substitute(b, map)?, *n)?,
        Node::Mul(fs) => mul_all(fs.iter().map(|f| substitute(f, map)).collect::<Result<Vec<_>, _>>()?),
        Node::Add(ts) => add_all(ts.iter().map(|t| substitute(t, map)).collect::<Result<Vec<_>, _>>()?),
        Node::Neg(_) | Node::Div(..) => substitute(&simplify(e)?, map)?,
    })
}
