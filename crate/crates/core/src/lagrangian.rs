//! Objects derived from a Lagrangian: energy, Poincaré–Cartan forms,
//! velocity Hessian and regularity.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{sample_points, Assignment, Equality, Expr, Symbol, FALLBACK_POINTS, FALLBACK_SEED};
use crate::geometry::{Chart, VectorField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LagrangianError {
    #[error("Lagrangian mentions `{0}`, which is not a coordinate or parameter of the chart")]
    ForeignSymbol(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lagrangian {
    chart: Chart,
    l: Expr,
}

impl Lagrangian {
    pub fn new(chart: Chart, l: Expr) -> Result<Lagrangian, LagrangianError> {
        let l = l.canon();
        if !chart.owns(&l) {
            let bad = l
                .free_symbols()
                .into_iter()
                .find(|s| !chart.owns(&Expr::sym(s.clone())))
                .map_or_else(String::new, |s| s.to_string());
            return Err(LagrangianError::ForeignSymbol(bad));
        }
        Ok(Lagrangian { chart, l })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn expr(&self) -> &Expr {
        &self.l
    }

    /// `dL/dq^i`.
    pub fn dq(&self, i: usize) -> Expr {
        self.l.diff(&Symbol::Base(i))
    }

    /// `dL/dv^i_alpha`.
    pub fn dv(&self, i: usize, alpha: usize) -> Expr {
        self.l.diff(&Symbol::Velocity { i, alpha })
    }

    /// `d^2 L / dq^j dv^i_alpha`.
    pub fn mixed(&self, j: usize, i: usize, alpha: usize) -> Expr {
        self.dv(i, alpha).diff(&Symbol::Base(j))
    }
}

/// A 1-form `c_i dq^i + c^i_alpha dv^i_alpha` on `T^1_k Q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneForm {
    pub dq: Vec<Expr>,
    /// `dv[i][alpha]` is the coefficient of `dv^i_alpha`.
    pub dv: Vec<Vec<Expr>>,
}

impl OneForm {
    pub fn zero(chart: &Chart) -> OneForm {
        OneForm { dq: vec![Expr::zero(); chart.n()], dv: vec![vec![Expr::zero(); chart.k()]; chart.n()] }
    }

    /// The differential `df`.
    pub fn exact(chart: &Chart, f: &Expr) -> OneForm {
        OneForm {
            dq: (0..chart.n()).map(|i| f.diff(&Symbol::Base(i))).collect(),
            dv: (0..chart.n()).map(|i| (0..chart.k()).map(|a| f.diff(&Symbol::Velocity { i, alpha: a })).collect()).collect(),
        }
    }

    /// Coefficients paired with their coordinate, in coordinate order.
    pub fn components(&self) -> Vec<(Symbol, &Expr)> {
        let mut out: Vec<(Symbol, &Expr)> = self.dq.iter().enumerate().map(|(i, c)| (Symbol::Base(i), c)).collect();
        for (i, row) in self.dv.iter().enumerate() {
            for (alpha, c) in row.iter().enumerate() {
                out.push((Symbol::Velocity { i, alpha }, c));
            }
        }
        out
    }

    /// `eta(X)`.
    pub fn contract(&self, x: &VectorField) -> Expr {
        Expr::sum(
            self.dq
                .iter()
                .zip(&x.base)
                .map(|(c, xi)| c * xi)
                .chain(self.dv.iter().flatten().zip(x.fiber.iter().flatten()).map(|(c, xi)| c * xi)),
        )
    }

    pub fn add(&self, other: &OneForm) -> OneForm {
        OneForm {
            dq: self.dq.iter().zip(&other.dq).map(|(a, b)| a + b).collect(),
            dv: self.dv.iter().zip(&other.dv).map(|(r, s)| r.iter().zip(s).map(|(a, b)| a + b).collect()).collect(),
        }
    }

    pub fn sub(&self, other: &OneForm) -> OneForm {
        OneForm {
            dq: self.dq.iter().zip(&other.dq).map(|(a, b)| a - b).collect(),
            dv: self.dv.iter().zip(&other.dv).map(|(r, s)| r.iter().zip(s).map(|(a, b)| a - b).collect()).collect(),
        }
    }

    pub fn equal(&self, other: &OneForm) -> Equality {
        self.components()
            .iter()
            .zip(other.components().iter())
            .fold(Equality::Symbolic, |g, ((_, a), (_, b))| g.and(a.equal(b)))
    }

    pub fn zero_grade(&self) -> Equality {
        self.components().iter().fold(Equality::Symbolic, |g, (_, c)| g.and(c.zero_grade()))
    }

    /// Checks `d(eta) = 0`. On failure returns the first pair of coordinates
    /// `(x_A, x_B)` with `d c_B / d x_A != d c_A / d x_B`, and the difference.
    pub fn closedness(&self) -> (Equality, Option<(Symbol, Symbol, Expr)>) {
        let comps = self.components();
        let mut grade = Equality::Symbolic;
        for a in 0..comps.len() {
            for b in a + 1..comps.len() {
                let (sa, ca) = &comps[a];
                let (sb, cb) = &comps[b];
                let d = cb.diff(sa) - ca.diff(sb);
                let g = d.zero_grade();
                if !g.holds() {
                    return (Equality::Unequal, Some((sa.clone(), sb.clone(), d)));
                }
                grade = grade.and(g);
            }
        }
        (grade, None)
    }
}

impl fmt::Display for OneForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .components()
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(s, c)| format!("({c}) d{s}"))
            .collect();
        if terms.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&terms.join(" + "))
        }
    }
}

/// `theta = c_i dq^i` in direction `alpha`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemiBasicOneForm {
    pub alpha: usize,
    pub coeffs: Vec<Expr>,
}

impl SemiBasicOneForm {
    pub fn to_one_form(&self, chart: &Chart) -> OneForm {
        OneForm { dq: self.coeffs.clone(), dv: vec![vec![Expr::zero(); chart.k()]; chart.n()] }
    }

    /// `theta(X) = c_i X^i`.
    pub fn contract(&self, x: &VectorField) -> Expr {
        Expr::sum(self.coeffs.iter().zip(&x.base).map(|(c, xi)| c * xi))
    }
}

/// `omega^alpha = a_ij dq^i ^ dq^j + g^{alpha beta}_ij dq^i ^ dv^j_beta`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoForm {
    pub alpha: usize,
    /// `a[i][j]`, antisymmetric.
    pub a: Vec<Vec<Expr>>,
    /// `g[i][j][beta]`.
    pub g: Vec<Vec<Vec<Expr>>>,
}

impl TwoForm {
    /// `i_X omega`.
    pub fn interior(&self, x: &VectorField) -> OneForm {
        let n = self.a.len();
        let k = self.g.first().and_then(|r| r.first()).map_or(0, Vec::len);
        let dq = (0..n)
            .map(|m| {
                let mut terms = Vec::new();
                for j in 0..n {
                    terms.push(Expr::int(-2) * &self.a[m][j] * &x.base[j]);
                    for beta in 0..k {
                        terms.push(-(&self.g[m][j][beta] * &x.fiber[j][beta]));
                    }
                }
                Expr::sum(terms)
            })
            .collect();
        let dv = (0..n)
            .map(|j| (0..k).map(|beta| Expr::sum((0..n).map(|i| &self.g[i][j][beta] * &x.base[i]))).collect())
            .collect();
        OneForm { dq, dv }
    }

    /// The non-zero terms, e.g. `sigma dq1^dv1_1`.
    pub fn terms(&self) -> Vec<String> {
        let n = self.a.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let c = Expr::int(2) * &self.a[i][j];
                if !c.is_zero() {
                    out.push(format!("({c}) dq{}^dq{}", i + 1, j + 1));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for (beta, c) in self.g[i][j].iter().enumerate() {
                    if !c.is_zero() {
                        out.push(format!("({c}) dq{}^dv{}_{}", i + 1, j + 1, beta + 1));
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for TwoForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.terms();
        if t.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&t.join(" + "))
        }
    }
}

/// `g^{alpha beta}_ij = d^2 L / dv^i_alpha dv^j_beta`, indexed by
/// `(alpha, i)` and `(beta, j)` through `alpha * n + i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HessianBlocks {
    pub k: usize,
    pub n: usize,
    pub matrix: Vec<Vec<Expr>>,
}

impl HessianBlocks {
    pub fn get(&self, alpha: usize, i: usize, beta: usize, j: usize) -> &Expr {
        &self.matrix[alpha * self.n + i][beta * self.n + j]
    }

    pub fn dim(&self) -> usize {
        self.k * self.n
    }
}

/// `E_L = v^i_alpha dL/dv^i_alpha - L`.
pub fn energy(l: &Lagrangian) -> Expr {
    let c = l.chart();
    let cl = Expr::sum((0..c.n()).flat_map(|i| (0..c.k()).map(move |a| (i, a))).map(|(i, a)| Expr::v(i, a) * l.dv(i, a)));
    cl - l.expr()
}

/// `theta^alpha = dL/dv^i_alpha dq^i`, one per direction.
pub fn cartan_one_forms(l: &Lagrangian) -> Vec<SemiBasicOneForm> {
    let c = l.chart();
    (0..c.k()).map(|alpha| SemiBasicOneForm { alpha, coeffs: (0..c.n()).map(|i| l.dv(i, alpha)).collect() }).collect()
}

/// `omega^alpha = -d theta^alpha`, one per direction.
pub fn cartan_two_forms(l: &Lagrangian) -> Vec<TwoForm> {
    let c = l.chart();
    let (n, k) = (c.n(), c.k());
    (0..k)
        .map(|alpha| {
            let a = (0..n)
                .map(|i| (0..n).map(|j| Expr::rational(1, 2) * (l.mixed(j, i, alpha) - l.mixed(i, j, alpha))).collect())
                .collect();
            let g = (0..n)
                .map(|i| {
                    (0..n).map(|j| (0..k).map(|beta| l.dv(i, alpha).diff(&Symbol::Velocity { i: j, alpha: beta })).collect()).collect()
                })
                .collect();
            TwoForm { alpha, a, g }
        })
        .collect()
}

pub fn hessian(l: &Lagrangian) -> HessianBlocks {
    let c = l.chart();
    let (n, k) = (c.n(), c.k());
    let idx: Vec<(usize, usize)> = (0..k).flat_map(|a| (0..n).map(move |i| (a, i))).collect();
    let first: Vec<Expr> = idx.iter().map(|&(a, i)| l.dv(i, a)).collect();
    let matrix = idx
        .iter()
        .enumerate()
        .map(|(r, _)| idx.iter().map(|&(b, j)| first[r].diff(&Symbol::Velocity { i: j, alpha: b })).collect())
        .collect();
    HessianBlocks { k, n, matrix }
}

/// Determinant by expansion over column subsets.
pub fn determinant(m: &[Vec<Expr>]) -> Expr {
    let d = m.len();
    assert!(d <= 16, "symbolic determinant limited to 16x16");
    if d == 0 {
        return Expr::one();
    }
    // minors[mask] = det of rows 0..popcount(mask) and the columns in mask.
    let mut minors: Vec<Option<Expr>> = vec![None; 1 << d];
    minors[0] = Some(Expr::one());
    for mask in 1usize..(1 << d) {
        let row = mask.count_ones() as usize - 1;
        let mut terms = Vec::new();
        for col in 0..d {
            if mask & (1 << col) == 0 {
                continue;
            }
            let rest = minors[mask & !(1 << col)].as_ref().unwrap();
            let above = (mask & ((1 << col) - 1)).count_ones() as usize;
            if m[row][col].is_zero() || rest.is_zero() {
                continue;
            }
            let t = &m[row][col] * rest;
            terms.push(if (row + above) % 2 == 1 { -t } else { t });
        }
        minors[mask] = Some(Expr::sum(terms));
    }
    minors[(1 << d) - 1].take().unwrap()
}

/// Determinant of a float matrix by partial-pivot elimination.
pub fn determinant_f64(mut m: Vec<Vec<f64>>) -> f64 {
    let d = m.len();
    let mut det = 1.0;
    for c in 0..d {
        let p = (c..d).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c];
        let (top, rest) = m.split_at_mut(c + 1);
        let pivot = &top[c];
        for row in rest.iter_mut() {
            let f = row[c] / pivot[c];
            for (x, p) in row[c..d].iter_mut().zip(&pivot[c..d]) {
                *x -= f * p;
            }
        }
    }
    det
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularityVerdict {
    Regular,
    Singular,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grade {
    Symbolic,
    Numeric,
}

impl Grade {
    pub fn label(self) -> &'static str {
        match self {
            Grade::Symbolic => "symbolic",
            Grade::Numeric => "numeric",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Regularity {
    pub verdict: RegularityVerdict,
    pub grade: Grade,
    /// Determinant of the Hessian, when the matrix is small enough to expand.
    pub determinant: Option<Expr>,
    /// Non-zero factors assumed by a symbolic `Regular` verdict on a monomial determinant.
    pub assumption: Option<String>,
    /// A sample point where the determinant vanishes, for `Undecided`.
    pub witness: Option<Assignment>,
}

/// Threshold below which a sampled determinant counts as zero.
pub const DET_ZERO: f64 = 1e-10;
const SYMBOLIC_DET_MAX: usize = 8;

/// Rank test of the velocity Hessian.
///
/// A constant determinant, or a single monomial in the parameters, gives a
/// symbolic verdict (the monomial is reported as assumed non-zero). Otherwise the
/// determinant is sampled at the seeded fallback points.
pub fn is_regular(l: &Lagrangian) -> Regularity {
    let h = hessian(l);
    let det = (h.dim() <= SYMBOLIC_DET_MAX).then(|| determinant(&h.matrix));
    if let Some(d) = &det {
        if d.is_zero() {
            return Regularity { verdict: RegularityVerdict::Singular, grade: Grade::Symbolic, determinant: det, assumption: None, witness: None };
        }
        if d.is_constant() {
            return Regularity { verdict: RegularityVerdict::Regular, grade: Grade::Symbolic, determinant: det, assumption: None, witness: None };
        }
        if !matches!(d.node(), crate::expr::Node::Add(_)) && !d.any_symbol(&|s| !s.is_param()) {
            let assumption = Some(format!("{d} != 0"));
            return Regularity { verdict: RegularityVerdict::Regular, grade: Grade::Symbolic, determinant: det, assumption, witness: None };
        }
    }
    let mut symbols = std::collections::BTreeSet::new();
    for row in &h.matrix {
        for e in row {
            symbols.extend(e.free_symbols());
        }
    }
    let points = sample_points(&symbols, FALLBACK_POINTS, FALLBACK_SEED);
    let values: Vec<Option<f64>> = points
        .par_iter()
        .map(|p| {
            let m: Option<Vec<Vec<f64>>> = h.matrix.iter().map(|r| r.iter().map(|e| e.eval(p).ok()).collect()).collect();
            m.map(determinant_f64)
        })
        .collect();
    let nonzero = values.iter().filter(|v| matches!(v, Some(x) if x.abs() > DET_ZERO)).count();
    let (verdict, witness) = if nonzero == points.len() {
        (RegularityVerdict::Regular, None)
    } else if nonzero == 0 && values.iter().all(Option::is_some) {
        (RegularityVerdict::Singular, None)
    } else {
        let i = values.iter().position(|v| !matches!(v, Some(x) if x.abs() > DET_ZERO)).unwrap();
        (RegularityVerdict::Undecided, Some(points[i].clone()))
    };
    Regularity { verdict, grade: Grade::Numeric, determinant: det, assumption: None, witness }
}

#[cfg(test)]
mod tests;
