//! Gauss–Jordan elimination over expressions.

use std::collections::BTreeMap;

use crate::expr::{Equality, Expr, Node};

#[derive(Debug, Clone)]
pub(crate) struct Reduced {
    pub particular: Vec<Expr>,
    pub kernel: Vec<Vec<Expr>>,
    /// Non-constant pivots, each assumed non-zero.
    pub assumptions: Vec<Expr>,
    pub grade: Equality,
}

#[derive(Debug, Clone)]
pub(crate) struct Conflict {
    /// Index of the violated equation in the input order.
    pub row: usize,
    pub residual: Expr,
    /// The equation had no non-zero coefficient to begin with.
    pub raw: bool,
}

fn vanishes(e: &Expr, grade: &mut Equality) -> bool {
    if e.is_zero() {
        return true;
    }
    let g = e.zero_grade();
    if g.holds() {
        *grade = grade.and(g);
        true
    } else {
        false
    }
}

fn pivot_rank(e: &Expr) -> (u8, usize) {
    let class = if e.is_constant() {
        0
    } else if !e.any_symbol(&|s| s.is_coordinate()) {
        1
    } else {
        2
    };
    (class, e.size())
}

fn factors(monomial: &Expr) -> BTreeMap<Expr, i64> {
    let mut out = BTreeMap::new();
    let items = match monomial.node() {
        Node::Mul(fs) => fs.clone(),
        _ if monomial.is_one() => Vec::new(),
        _ => vec![monomial.clone()],
    };
    for f in items {
        let (b, n) = match f.node() {
            Node::Pow(b, n) => (b.clone(), *n),
            _ => (f.clone(), 1),
        };
        *out.entry(b).or_insert(0) += n;
    }
    out
}

/// `e / m` when `m` is a single term dividing every term of `e` exactly.
fn exact_quotient(e: &Expr, m: &Expr) -> Option<Expr> {
    let m = m.canon();
    if m.terms().len() != 1 {
        return None;
    }
    let (mc, mm) = m.split_coefficient();
    let mf = factors(&mm);
    let mut out = Vec::new();
    for t in e.terms() {
        let (tc, tm) = t.split_coefficient();
        let mut tf = factors(&tm);
        for (b, n) in &mf {
            let have = tf.entry(b.clone()).or_insert(0);
            if (*n > 0 && *have < *n) || (*n < 0 && *have > *n) {
                return None;
            }
            *have -= n;
        }
        let rest = tf.into_iter().filter(|(_, n)| *n != 0).map(|(b, n)| b.powi(n).expect("non-zero base"));
        out.push(Expr::num(&tc / &mc) * Expr::product(rest));
    }
    Some(Expr::sum(out))
}

fn divide(e: &Expr, p: &Expr) -> Expr {
    exact_quotient(e, p).unwrap_or_else(|| e.checked_div(p).expect("pivot is non-zero"))
}

/// Solves `a x = b`.
pub(crate) fn solve(a: &[Vec<Expr>], b: &[Expr]) -> Result<Reduced, Conflict> {
    let cols = a.first().map_or(0, Vec::len);
    let mut grade = Equality::Symbolic;
    let mut rows: Vec<(usize, Vec<Expr>, Expr)> =
        a.iter().zip(b).enumerate().map(|(i, (r, rhs))| (i, r.iter().map(Expr::canon).collect(), rhs.canon())).collect();
    let raw: Vec<bool> = rows.iter().map(|(_, r, _)| r.iter().all(|e| vanishes(e, &mut grade))).collect();
    let mut assumptions = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();

    for c in 0..cols {
        let rank = pivots.len();
        let mut best: Option<(usize, (u8, usize))> = None;
        for (r, row) in rows.iter_mut().enumerate().skip(rank) {
            if vanishes(&row.1[c], &mut grade) {
                row.1[c] = Expr::zero();
                continue;
            }
            let score = pivot_rank(&row.1[c]);
            if best.is_none_or(|(_, s)| score < s) {
                best = Some((r, score));
            }
        }
        let Some((r, (class, _))) = best else { continue };
        rows.swap(rank, r);
        let p = rows[rank].1[c].clone();
        if class > 0 {
            assumptions.push(p.clone());
        }
        let (_, prow, prhs) = &mut rows[rank];
        for e in prow.iter_mut() {
            *e = divide(e, &p);
        }
        *prhs = divide(prhs, &p);
        let (prow, prhs) = (rows[rank].1.clone(), rows[rank].2.clone());
        for (r, row) in rows.iter_mut().enumerate() {
            if r == rank || row.1[c].is_zero() {
                continue;
            }
            let factor = row.1[c].clone();
            for (e, pe) in row.1.iter_mut().zip(&prow) {
                *e = (&*e - &factor * pe).canon();
            }
            row.2 = (&row.2 - &factor * &prhs).canon();
            row.1[c] = Expr::zero();
        }
        pivots.push(c);
    }

    let rank = pivots.len();
    let mut conflict: Option<Conflict> = None;
    for (orig, _, rhs) in rows.iter().skip(rank) {
        if !vanishes(rhs, &mut grade) && conflict.as_ref().is_none_or(|c| *orig < c.row) {
            conflict = Some(Conflict { row: *orig, residual: rhs.clone(), raw: raw[*orig] });
        }
    }
    if let Some(c) = conflict {
        return Err(c);
    }

    let mut particular = vec![Expr::zero(); cols];
    for (r, &c) in pivots.iter().enumerate() {
        particular[c] = rows[r].2.clone();
    }
    let kernel = (0..cols)
        .filter(|c| !pivots.contains(c))
        .map(|f| {
            let mut v = vec![Expr::zero(); cols];
            v[f] = Expr::one();
            for (r, &c) in pivots.iter().enumerate() {
                v[c] = (-&rows[r].1[f]).canon();
            }
            v
        })
        .collect();
    Ok(Reduced { particular, kernel, assumptions, grade })
}
