//! Second-order partial differential equation fields (SOPDEs) and their
//! validation: SOPDE-ness, Euler–Lagrange compatibility and integrability.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{Equality, Expr, Symbol};
use crate::geometry::{liouville, sum_j, Chart, KVectorField, VectorField};
use crate::lagrangian::{cartan_two_forms, energy, hessian, Lagrangian, OneForm};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SopdeError {
    #[error("missing coefficient xi{}_{}_{}", .i + 1, .alpha + 1, .beta + 1)]
    MissingCoefficient { i: usize, alpha: usize, beta: usize },
    #[error("coefficient index ({}, {}, {}) out of range", .i + 1, .alpha + 1, .beta + 1)]
    IndexOutOfRange { i: usize, alpha: usize, beta: usize },
}

/// `xi_alpha = v^i_alpha d/dq^i + xi^i_{alpha beta} d/dv^i_beta`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sopde {
    chart: Chart,
    /// `coeffs[i][alpha][beta]`.
    coeffs: Vec<Vec<Vec<Expr>>>,
}

impl Sopde {
    /// Builds a SOPDE from a full table keyed by zero-based `(i, alpha, beta)`.
    pub fn new(chart: &Chart, table: &BTreeMap<(usize, usize, usize), Expr>) -> Result<Sopde, SopdeError> {
        let (n, k) = (chart.n(), chart.k());
        for &(i, alpha, beta) in table.keys() {
            if i >= n || alpha >= k || beta >= k {
                return Err(SopdeError::IndexOutOfRange { i, alpha, beta });
            }
        }
        let mut coeffs = vec![vec![vec![Expr::zero(); k]; k]; n];
        for (i, row) in coeffs.iter_mut().enumerate() {
            for (alpha, r) in row.iter_mut().enumerate() {
                for (beta, c) in r.iter_mut().enumerate() {
                    *c = table.get(&(i, alpha, beta)).ok_or(SopdeError::MissingCoefficient { i, alpha, beta })?.canon();
                }
            }
        }
        Ok(Sopde { chart: chart.clone(), coeffs })
    }

    /// The SOPDE with all coefficients zero.
    pub fn zero(chart: &Chart) -> Sopde {
        Sopde { chart: chart.clone(), coeffs: vec![vec![vec![Expr::zero(); chart.k()]; chart.k()]; chart.n()] }
    }

    /// Builds a SOPDE from `f(i, alpha, beta)`.
    pub fn from_fn(chart: &Chart, f: impl Fn(usize, usize, usize) -> Expr) -> Sopde {
        let (n, k) = (chart.n(), chart.k());
        let coeffs = (0..n).map(|i| (0..k).map(|a| (0..k).map(|b| f(i, a, b).canon()).collect()).collect()).collect();
        Sopde { chart: chart.clone(), coeffs }
    }

    /// The SOPDE whose coefficients are the formal symbols `xi{i}_{a}_{b}`,
    /// symmetric in `(alpha, beta)`.
    pub fn formal(chart: &Chart) -> Sopde {
        Sopde::from_fn(chart, |i, a, b| Expr::sym(Symbol::coeff(i, a, b)))
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn coeff(&self, i: usize, alpha: usize, beta: usize) -> &Expr {
        &self.coeffs[i][alpha][beta]
    }

    /// `xi_alpha` as a vector field.
    pub fn field(&self, alpha: usize) -> VectorField {
        let (n, k) = (self.chart.n(), self.chart.k());
        VectorField {
            base: (0..n).map(|i| Expr::v(i, alpha)).collect(),
            fiber: (0..n).map(|i| (0..k).map(|beta| self.coeffs[i][alpha][beta].clone()).collect()).collect(),
        }
    }

    pub fn as_kvector(&self) -> KVectorField {
        KVectorField((0..self.chart.k()).map(|a| self.field(a)).collect())
    }

    /// `xi_alpha(f)`.
    pub fn apply(&self, alpha: usize, f: &Expr) -> Expr {
        let (n, k) = (self.chart.n(), self.chart.k());
        let mut comps = Vec::with_capacity(n * (k + 1));
        for i in 0..n {
            comps.push((Symbol::Base(i), Expr::v(i, alpha)));
            for beta in 0..k {
                comps.push((Symbol::Velocity { i, alpha: beta }, self.coeffs[i][alpha][beta].clone()));
            }
        }
        f.derive_along(&comps)
    }

    /// `sum_alpha xi_alpha(f^alpha)`.
    pub fn divergence(&self, f: &[Expr]) -> Expr {
        Expr::sum(f.iter().enumerate().map(|(alpha, fa)| self.apply(alpha, fa)))
    }
}

/// True iff the base components of every `xi_alpha` are `v^i_alpha`.
pub fn is_sopde(xi: &KVectorField) -> Equality {
    let mut g = Equality::Symbolic;
    for (alpha, x) in xi.0.iter().enumerate() {
        for (i, c) in x.base.iter().enumerate() {
            g = g.and(c.equal(&Expr::v(i, alpha)));
        }
    }
    g
}

/// `sum_alpha J^alpha xi_alpha = C`.
pub fn satisfies_summed_j(chart: &Chart, xi: &KVectorField) -> Equality {
    sum_j(xi).equal(&liouville(chart))
}

/// `J^alpha xi_alpha = v^i_alpha d/dv^i_alpha` for each `alpha` separately.
pub fn satisfies_per_direction_j(chart: &Chart, xi: &KVectorField) -> Equality {
    let c = liouville(chart);
    let mut g = Equality::Symbolic;
    for (alpha, x) in xi.0.iter().enumerate() {
        let mut part = VectorField::zero(chart);
        for i in 0..chart.n() {
            part.fiber[i][alpha] = c.fiber[i][alpha].clone();
        }
        g = g.and(crate::geometry::apply_j(alpha, x).equal(&part));
    }
    g
}

/// `xi_alpha(dL/dv^i_alpha) - dL/dq^i`, one per `i`.
pub fn xkl_residual(xi: &Sopde, l: &Lagrangian) -> Vec<Expr> {
    let c = l.chart();
    (0..c.n()).map(|i| Expr::sum((0..c.k()).map(|alpha| xi.apply(alpha, &l.dv(i, alpha)))) - l.dq(i)).collect()
}

/// `g^{alpha beta}_ij xi^j_{alpha beta} + d^2L/dq^j dv^i_alpha v^j_alpha - dL/dq^i`.
pub fn first_block_residual(xi: &Sopde, l: &Lagrangian) -> Vec<Expr> {
    let c = l.chart();
    let (n, k) = (c.n(), c.k());
    let h = hessian(l);
    (0..n)
        .map(|i| {
            let mut terms = Vec::new();
            for alpha in 0..k {
                for beta in 0..k {
                    for j in 0..n {
                        terms.push(h.get(alpha, i, beta, j) * xi.coeff(j, alpha, beta));
                    }
                }
                for j in 0..n {
                    terms.push(l.mixed(j, i, alpha) * Expr::v(j, alpha));
                }
            }
            Expr::sum(terms) - l.dq(i)
        })
        .collect()
}

/// Grade of `xi` in `X^k_L`.
pub fn in_xkl(xi: &Sopde, l: &Lagrangian) -> Equality {
    xkl_residual(xi, l).iter().fold(Equality::Symbolic, |g, r| g.and(r.zero_grade()))
}

/// `sum_alpha i_{xi_alpha} omega^alpha - dE_L`.
pub fn geometric_el_residual(xi: &KVectorField, l: &Lagrangian) -> OneForm {
    let c = l.chart();
    let mut acc = OneForm::zero(c);
    for (om, x) in cartan_two_forms(l).iter().zip(&xi.0) {
        acc = acc.add(&om.interior(x));
    }
    acc.sub(&OneForm::exact(c, &energy(l)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosureFailure {
    pub i: usize,
    pub alpha: usize,
    pub beta: usize,
    pub gamma: usize,
    /// `xi_alpha(xi^i_{beta gamma}) - xi_beta(xi^i_{alpha gamma})`.
    pub residual: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrabilityReport {
    pub symmetric: bool,
    /// Zero-based `(i, alpha, beta)` with `alpha < beta` and `xi^i_{ab} != xi^i_{ba}`.
    pub symmetric_failures: Vec<(usize, usize, usize)>,
    pub closure: bool,
    pub closure_failures: Vec<ClosureFailure>,
    pub brackets_vanish: bool,
    /// Zero-based `(alpha, beta)` with `[xi_alpha, xi_beta] != 0`.
    pub bracket_failures: Vec<(usize, usize)>,
    /// Weakest grade among the identities that hold.
    pub grade: Equality,
}

impl IntegrabilityReport {
    pub fn integrable(&self) -> bool {
        self.symmetric && self.closure
    }
}

/// Checks `xi^i_{ab} = xi^i_{ba}` and `xi_a(xi^i_{bc}) = xi_b(xi^i_{ac})`
/// identically on `T^1_k Q`, and cross-checks with `[xi_a, xi_b] = 0`.
pub fn integrability_report(xi: &Sopde) -> IntegrabilityReport {
    let (n, k) = (xi.chart.n(), xi.chart.k());
    let mut grade = Equality::Symbolic;

    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
    let sym: Vec<((usize, usize, usize), Equality)> = pairs
        .iter()
        .flat_map(|&(a, b)| (0..n).map(move |i| (i, a, b)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, a, b)| ((i, a, b), xi.coeff(i, a, b).equal(xi.coeff(i, b, a))))
        .collect();
    let mut symmetric_failures = Vec::new();
    for (idx, g) in sym {
        if g.holds() {
            grade = grade.and(g);
        } else {
            symmetric_failures.push(idx);
        }
    }

    let tuples: Vec<(usize, usize, usize, usize)> =
        pairs.iter().flat_map(|&(a, b)| (0..n).flat_map(move |i| (0..k).map(move |c| (i, a, b, c)))).collect();
    let clos: Vec<(ClosureFailure, Equality)> = tuples
        .into_par_iter()
        .map(|(i, alpha, beta, gamma)| {
            let residual = xi.apply(alpha, xi.coeff(i, beta, gamma)) - xi.apply(beta, xi.coeff(i, alpha, gamma));
            let g = residual.zero_grade();
            (ClosureFailure { i, alpha, beta, gamma, residual }, g)
        })
        .collect();
    let mut closure_failures = Vec::new();
    for (f, g) in clos {
        if g.holds() {
            grade = grade.and(g);
        } else {
            closure_failures.push(f);
        }
    }

    let kv = xi.as_kvector();
    let brackets: Vec<((usize, usize), Equality)> = pairs
        .par_iter()
        .map(|&(a, b)| ((a, b), crate::geometry::lie_bracket(kv.get(a), kv.get(b)).zero_grade()))
        .collect();
    let mut bracket_failures = Vec::new();
    for (p, g) in brackets {
        if g.holds() {
            grade = grade.and(g);
        } else {
            bracket_failures.push(p);
        }
    }

    IntegrabilityReport {
        symmetric: symmetric_failures.is_empty(),
        symmetric_failures,
        closure: closure_failures.is_empty(),
        closure_failures,
        brackets_vanish: bracket_failures.is_empty(),
        bracket_failures,
        grade,
    }
}

/// Euler–Lagrange residuals with the second derivatives of a section
/// replaced by the symmetric jet symbols `w^j_{alpha beta}`:
/// `g^{alpha beta}_ij w^j_{alpha beta} + d^2L/dq^j dv^i_alpha v^j_alpha - dL/dq^i`.
pub fn el_operator(l: &Lagrangian) -> Vec<Expr> {
    let c = l.chart();
    let (n, k) = (c.n(), c.k());
    let h = hessian(l);
    (0..n)
        .map(|i| {
            let mut terms = Vec::new();
            for alpha in 0..k {
                for beta in 0..k {
                    for j in 0..n {
                        terms.push(h.get(alpha, i, beta, j) * Expr::sym(Symbol::jet(j, alpha, beta)));
                    }
                }
                for j in 0..n {
                    terms.push(l.mixed(j, i, alpha) * Expr::v(j, alpha));
                }
            }
            Expr::sum(terms) - l.dq(i)
        })
        .collect()
}

/// Substitutes `w^j_{alpha beta} -> xi^j_{alpha beta}` (with `alpha <= beta`).
pub fn restrict_to_sopde(ops: &[Expr], xi: &Sopde) -> Vec<Expr> {
    ops.iter()
        .map(|e| {
            e.substitute(&|s| match s {
                Symbol::Jet { i, alpha, beta } => Some(xi.coeff(*i, *alpha, *beta).clone()),
                _ => None,
            })
        })
        .collect()
}
