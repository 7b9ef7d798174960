//! Numerical verification on grids: sampled and finite-difference sections,
//! their first prolongations, and residuals of the Euler–Lagrange equations,
//! of conservation laws and of integral sections.
//!
//! Grid values are stored flat in row-major order: the last direction
//! varies fastest. All stencils are centered and second order; boundary
//! layers are excluded from residual norms.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{Assignment, Expr, ExprError, Symbol};
use crate::geometry::Chart;
use crate::lagrangian::{hessian, Lagrangian};
use crate::sopde::{el_operator, Sopde};
use crate::symmetry::CurrentTuple;

/// Fewest nodes per direction.
pub const MIN_NODES: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("expected {expected} components, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("evaluation failed at t = {point:?}: {source}")]
    Eval { point: Vec<f64>, source: ExprError },
    #[error("CFL condition violated: Courant number {courant:.4} > 1")]
    CflViolation { courant: f64 },
    #[error("relaxation did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("unsupported problem: {0}")]
    Unsupported(String),
}

/// A rectangular grid `prod_alpha [lo_alpha, hi_alpha]` with `counts[alpha]` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    counts: Vec<usize>,
}

impl Grid {
    pub fn new(extents: &[(f64, f64)], counts: &[usize]) -> Result<Grid, NumError> {
        if extents.is_empty() || extents.len() != counts.len() {
            return Err(NumError::InvalidGrid("one extent and count per direction".into()));
        }
        for (alpha, (&(a, b), &c)) in extents.iter().zip(counts).enumerate() {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(NumError::InvalidGrid(format!("direction {} has extent [{a}, {b}]", alpha + 1)));
            }
            if c < MIN_NODES {
                return Err(NumError::InvalidGrid(format!("direction {} has {c} nodes, need >= {MIN_NODES}", alpha + 1)));
            }
        }
        Ok(Grid { lo: extents.iter().map(|e| e.0).collect(), hi: extents.iter().map(|e| e.1).collect(), counts: counts.to_vec() })
    }

    /// Nodes spaced by (approximately) `h`, rounded to fit each extent exactly.
    pub fn with_step(extents: &[(f64, f64)], h: f64) -> Result<Grid, NumError> {
        if h.is_nan() || h <= 0.0 {
            return Err(NumError::InvalidGrid(format!("step {h} must be positive")));
        }
        let counts: Vec<usize> = extents.iter().map(|(a, b)| ((b - a) / h).round() as usize + 1).collect();
        Grid::new(extents, &counts)
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn extent(&self, alpha: usize) -> (f64, f64) {
        (self.lo[alpha], self.hi[alpha])
    }

    pub fn h(&self, alpha: usize) -> f64 {
        (self.hi[alpha] - self.lo[alpha]) / (self.counts[alpha] - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stride(&self, alpha: usize) -> usize {
        self.counts[alpha + 1..].iter().product()
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().enumerate().map(|(a, i)| i * self.stride(a)).sum()
    }

    pub fn multi(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.k()];
        for a in (0..self.k()).rev() {
            idx[a] = flat % self.counts[a];
            flat /= self.counts[a];
        }
        idx
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi(flat).iter().enumerate().map(|(a, &i)| self.lo[a] + i as f64 * self.h(a)).collect()
    }

    /// Distance in nodes to the nearest boundary face.
    pub fn margin(&self, flat: usize) -> usize {
        self.multi(flat).iter().zip(&self.counts).map(|(&i, &c)| i.min(c - 1 - i)).min().unwrap_or(0)
    }
}

/// How the first and second derivatives of a section are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prolongation {
    Exact,
    FiniteDifference,
}

/// Node values `phi^i` and the prolongation `(phi^i_alpha, phi^i_{alpha beta})`,
/// valid at nodes whose margin is at least `margin`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSection {
    pub grid: Grid,
    pub n: usize,
    /// `values[node * n + i]`.
    pub values: Vec<f64>,
    /// `first[(node * n + i) * k + alpha]`.
    pub first: Vec<f64>,
    /// `second[((node * n + i) * k + alpha) * k + beta]`.
    pub second: Vec<f64>,
    pub prolongation: Prolongation,
    pub margin: usize,
}

impl DiscreteSection {
    pub fn k(&self) -> usize {
        self.grid.k()
    }

    pub fn value(&self, node: usize, i: usize) -> f64 {
        self.values[node * self.n + i]
    }

    pub fn d1(&self, node: usize, i: usize, alpha: usize) -> f64 {
        self.first[(node * self.n + i) * self.k() + alpha]
    }

    pub fn d2(&self, node: usize, i: usize, alpha: usize, beta: usize) -> f64 {
        let k = self.k();
        self.second[((node * self.n + i) * k + alpha) * k + beta]
    }

    /// Builds a section from node values, prolonged by centered differences.
    pub fn from_values(grid: Grid, n: usize, values: Vec<f64>) -> Result<DiscreteSection, NumError> {
        if values.len() != grid.len() * n {
            return Err(NumError::ShapeMismatch { expected: grid.len() * n, found: values.len() });
        }
        let k = grid.k();
        let nodes = grid.len();
        let at = |node: usize, i: usize| values[node * n + i];
        let per_node: Vec<(Vec<f64>, Vec<f64>)> = (0..nodes)
            .into_par_iter()
            .map(|node| {
                let mut d1 = vec![f64::NAN; n * k];
                let mut d2 = vec![f64::NAN; n * k * k];
                if grid.margin(node) >= 1 {
                    for i in 0..n {
                        for a in 0..k {
                            let (sa, ha) = (grid.stride(a), grid.h(a));
                            d1[i * k + a] = (at(node + sa, i) - at(node - sa, i)) / (2.0 * ha);
                            for b in 0..k {
                                let (sb, hb) = (grid.stride(b), grid.h(b));
                                d2[(i * k + a) * k + b] = if a == b {
                                    (at(node + sa, i) - 2.0 * at(node, i) + at(node - sa, i)) / (ha * ha)
                                } else {
                                    (at(node + sa + sb, i) - at(node + sa - sb, i) - at(node - sa + sb, i)
                                        + at(node - sa - sb, i))
                                        / (4.0 * ha * hb)
                                };
                            }
                        }
                    }
                }
                (d1, d2)
            })
            .collect();
        let (first, second) = flatten(per_node);
        Ok(DiscreteSection { grid, n, values, first, second, prolongation: Prolongation::FiniteDifference, margin: 1 })
    }

    /// Plain-text table, one node per line: multi-index, coordinates,
    /// values and first derivatives.
    pub fn to_table(&self) -> String {
        let k = self.k();
        let mut cols: Vec<String> = (1..=k).map(|a| format!("idx{a}")).collect();
        cols.extend((1..=k).map(|a| format!("t{a}")));
        cols.extend((1..=self.n).map(|i| format!("q{i}")));
        cols.extend((1..=self.n).flat_map(|i| (1..=k).map(move |a| format!("v{i}_{a}"))));
        let mut out = cols.join("\t");
        out.push('\n');
        for node in 0..self.grid.len() {
            let mut fields: Vec<String> = self.grid.multi(node).iter().map(usize::to_string).collect();
            fields.extend(self.grid.point(node).iter().map(|x| format!("{x:.12e}")));
            fields.extend((0..self.n).map(|i| format!("{:.12e}", self.value(node, i))));
            fields.extend((0..self.n).flat_map(|i| (0..k).map(move |a| (i, a))).map(|(i, a)| format!("{:.12e}", self.d1(node, i, a))));
            out.push_str(&fields.join("\t"));
            out.push('\n');
        }
        out
    }
}

fn flatten(per_node: Vec<(Vec<f64>, Vec<f64>)>) -> (Vec<f64>, Vec<f64>) {
    let mut first = Vec::new();
    let mut second = Vec::new();
    for (a, b) in per_node {
        first.extend(a);
        second.extend(b);
    }
    (first, second)
}

fn env_at<'a>(params: &'a Assignment, t: &'a [f64]) -> impl Fn(&Symbol) -> Option<f64> + 'a {
    move |s: &Symbol| match s {
        Symbol::Time(a) => t.get(*a).copied(),
        _ => params.get(s),
    }
}

/// Evaluates `phi` (expressions in `t1..tk` and parameters) on the grid.
pub fn sample_analytic(
    chart: &Chart,
    phi: &[Expr],
    grid: &Grid,
    params: &Assignment,
    prolongation: Prolongation,
) -> Result<DiscreteSection, NumError> {
    let (n, k) = (chart.n(), chart.k());
    if phi.len() != n {
        return Err(NumError::ShapeMismatch { expected: n, found: phi.len() });
    }
    if grid.k() != k {
        return Err(NumError::ShapeMismatch { expected: k, found: grid.k() });
    }
    let nodes = grid.len();
    let eval_all = |exprs: &[Expr]| -> Result<Vec<f64>, NumError> {
        let rows: Vec<Vec<f64>> = (0..nodes)
            .into_par_iter()
            .map(|node| {
                let t = grid.point(node);
                let env = env_at(params, &t);
                exprs.iter().map(|e| e.eval(&env)).collect::<Result<Vec<f64>, _>>().map_err(|source| NumError::Eval { point: t.clone(), source })
            })
            .collect::<Result<_, _>>()?;
        Ok(rows.into_iter().flatten().collect())
    };
    let values = eval_all(phi)?;
    match prolongation {
        Prolongation::FiniteDifference => DiscreteSection::from_values(grid.clone(), n, values),
        Prolongation::Exact => {
            let d1: Vec<Expr> = phi.iter().flat_map(|p| (0..k).map(move |a| p.diff(&Symbol::Time(a)))).collect();
            let d2: Vec<Expr> = d1.iter().flat_map(|p| (0..k).map(move |b| p.diff(&Symbol::Time(b)))).collect();
            Ok(DiscreteSection {
                grid: grid.clone(),
                n,
                values,
                first: eval_all(&d1)?,
                second: eval_all(&d2)?,
                prolongation,
                margin: 0,
            })
        }
    }
}

/// Residual norms over the nodes with margin at least `margin`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub max_abs: f64,
    /// Root mean square.
    pub l2_mean: f64,
    pub nodes: usize,
    pub margin: usize,
    /// Per-node residual, `NaN` outside the evaluated region.
    pub values: Vec<f64>,
}

impl fmt::Display for ResidualReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "max_abs: {:e}", self.max_abs)?;
        writeln!(f, "l2_mean: {:e}", self.l2_mean)?;
        writeln!(f, "nodes: {}", self.nodes)?;
        write!(f, "margin: {}", self.margin)
    }
}

/// Deterministic pairwise summation.
fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

fn report(grid: &Grid, margin: usize, per_node: impl Fn(usize) -> Result<f64, NumError> + Sync) -> Result<ResidualReport, NumError> {
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|node| if grid.margin(node) >= margin { per_node(node) } else { Ok(f64::NAN) })
        .collect::<Result<_, _>>()?;
    let inside: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    let max_abs = inside.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let squares: Vec<f64> = inside.iter().map(|x| x * x).collect();
    let l2_mean = if inside.is_empty() { 0.0 } else { (pairwise_sum(&squares) / inside.len() as f64).sqrt() };
    Ok(ResidualReport { max_abs, l2_mean, nodes: inside.len(), margin, values })
}

/// Environment `q^i, v^i_alpha, w^i_{alpha beta}` read from the section at `node`.
fn jet_env<'a>(s: &'a DiscreteSection, node: usize, params: &'a Assignment) -> impl Fn(&Symbol) -> Option<f64> + 'a {
    move |sym: &Symbol| match sym {
        Symbol::Base(i) => Some(s.value(node, *i)),
        Symbol::Velocity { i, alpha } => Some(s.d1(node, *i, *alpha)),
        Symbol::Jet { i, alpha, beta } => Some(s.d2(node, *i, *alpha, *beta)),
        _ => params.get(sym),
    }
}

fn eval_at(e: &Expr, env: &dyn crate::expr::Env, s: &DiscreteSection, node: usize) -> Result<f64, NumError> {
    e.eval(env).map_err(|source| NumError::Eval { point: s.grid.point(node), source })
}

fn check_section(chart: &Chart, s: &DiscreteSection) -> Result<(), NumError> {
    if s.n != chart.n() {
        return Err(NumError::ShapeMismatch { expected: chart.n(), found: s.n });
    }
    if s.k() != chart.k() {
        return Err(NumError::ShapeMismatch { expected: chart.k(), found: s.k() });
    }
    Ok(())
}

/// `max_i |EL_i|` at each node, with the section's derivatives substituted
/// into the Euler–Lagrange operator.
pub fn el_residual(s: &DiscreteSection, l: &Lagrangian, params: &Assignment) -> Result<ResidualReport, NumError> {
    check_section(l.chart(), s)?;
    let ops = el_operator(l);
    report(&s.grid, s.margin, |node| {
        let env = jet_env(s, node, params);
        ops.iter().try_fold(0.0f64, |m, op| Ok(m.max(eval_at(op, &env, s, node)?.abs())))
    })
}

/// How the divergence of `f o phi^(1)` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceMethod {
    /// Centered `t^alpha` differences of `f^alpha o phi^(1)`.
    CenteredDifference,
    /// `df^alpha/dq^i phi^i_alpha + df^alpha/dv^i_beta phi^i_{alpha beta}`.
    ChainRule,
    /// Chain rule on exactly prolonged sections, centered differences otherwise.
    Auto,
}

impl DivergenceMethod {
    pub fn resolve(self, s: &DiscreteSection) -> DivergenceMethod {
        match (self, s.prolongation) {
            (DivergenceMethod::Auto, Prolongation::Exact) => DivergenceMethod::ChainRule,
            (DivergenceMethod::Auto, Prolongation::FiniteDifference) => DivergenceMethod::CenteredDifference,
            (m, _) => m,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DivergenceMethod::CenteredDifference => "centered-difference",
            DivergenceMethod::ChainRule => "chain-rule",
            DivergenceMethod::Auto => "auto",
        }
    }
}

/// `sum_alpha d(f^alpha o phi^(1))/dt^alpha` at each node.
pub fn divergence_residual(
    f: &CurrentTuple,
    chart: &Chart,
    s: &DiscreteSection,
    params: &Assignment,
    method: DivergenceMethod,
) -> Result<ResidualReport, NumError> {
    check_section(chart, s)?;
    let (n, k) = (chart.n(), chart.k());
    if f.k() != k {
        return Err(NumError::ShapeMismatch { expected: k, found: f.k() });
    }
    match method.resolve(s) {
        DivergenceMethod::ChainRule => {
            let total = Expr::sum((0..k).map(|alpha| {
                Expr::sum((0..n).map(|i| {
                    let dq = f.get(alpha).diff(&Symbol::Base(i)) * Expr::v(i, alpha);
                    let dv = Expr::sum((0..k).map(|beta| {
                        f.get(alpha).diff(&Symbol::Velocity { i, alpha: beta }) * Expr::sym(Symbol::jet(i, alpha, beta))
                    }));
                    dq + dv
                }))
            }));
            report(&s.grid, s.margin, |node| eval_at(&total, &jet_env(s, node, params), s, node))
        }
        _ => {
            let along: Vec<Vec<f64>> = (0..k)
                .map(|alpha| {
                    (0..s.grid.len())
                        .into_par_iter()
                        .map(|node| {
                            if s.grid.margin(node) >= s.margin {
                                eval_at(f.get(alpha), &jet_env(s, node, params), s, node)
                            } else {
                                Ok(f64::NAN)
                            }
                        })
                        .collect::<Result<Vec<f64>, _>>()
                })
                .collect::<Result<_, _>>()?;
            report(&s.grid, s.margin + 1, |node| {
                Ok((0..k)
                    .map(|a| {
                        let st = s.grid.stride(a);
                        (along[a][node + st] - along[a][node - st]) / (2.0 * s.grid.h(a))
                    })
                    .sum())
            })
        }
    }
}

/// `max_{i, alpha <= beta} |phi^i_{alpha beta} - xi^i_{alpha beta}(phi^(1))|` at each node.
pub fn integral_section_residual(xi: &Sopde, s: &DiscreteSection, params: &Assignment) -> Result<ResidualReport, NumError> {
    check_section(xi.chart(), s)?;
    let (n, k) = (s.n, s.k());
    report(&s.grid, s.margin, |node| {
        let env = jet_env(s, node, params);
        let mut m = 0.0f64;
        for i in 0..n {
            for a in 0..k {
                for b in a..k {
                    m = m.max((s.d2(node, i, a, b) - eval_at(xi.coeff(i, a, b), &env, s, node)?).abs());
                }
            }
        }
        Ok(m)
    })
}

/// `max_i |g^{alpha beta}_ij(phi^(1)) (xi^j_{alpha beta}(phi^(1)) - phi^j_{alpha beta})|`.
pub fn hessian_weighted_residual(xi: &Sopde, l: &Lagrangian, s: &DiscreteSection, params: &Assignment) -> Result<ResidualReport, NumError> {
    check_section(l.chart(), s)?;
    let (n, k) = (s.n, s.k());
    let h = hessian(l);
    report(&s.grid, s.margin, |node| {
        let env = jet_env(s, node, params);
        let mut m = 0.0f64;
        for i in 0..n {
            let mut acc = 0.0;
            for a in 0..k {
                for b in 0..k {
                    for j in 0..n {
                        let g = h.get(a, i, b, j);
                        if g.is_zero() {
                            continue;
                        }
                        acc += eval_at(g, &env, s, node)? * (eval_at(xi.coeff(j, a, b), &env, s, node)? - s.d2(node, j, a, b));
                    }
                }
            }
            m = m.max(acc.abs());
        }
        Ok(m)
    })
}

/// Initial and boundary data for [`solve_fd`], as expressions in `t1..tk`
/// and parameters.
#[derive(Debug, Clone)]
pub enum FdData {
    /// `t1` is time: `phi` and `d phi/dt1` on `t1 = lo`, Dirichlet values on the
    /// other faces.
    Hyperbolic { initial: Vec<Expr>, velocity: Vec<Expr>, boundary: Vec<Expr> },
    /// Dirichlet values on every face; successive over-relaxation in the interior.
    Elliptic { boundary: Vec<Expr>, tolerance: f64, max_iterations: usize },
}

#[derive(Debug, Clone)]
pub struct FdSolution {
    pub section: DiscreteSection,
    pub el: ResidualReport,
    pub iterations: usize,
}

/// `c_alpha` of `sum_alpha c_alpha phi_{alpha alpha} = 0` per component, if
/// the Euler–Lagrange equations have that form.
fn diagonal_coefficients(l: &Lagrangian, params: &Assignment) -> Result<Vec<f64>, NumError> {
    let c = l.chart();
    let (n, k) = (c.n(), c.k());
    let unsupported = || NumError::Unsupported("requires sum_alpha c_alpha phi_{alpha alpha} = 0 with constant c_alpha".into());
    for i in 0..n {
        if !l.dq(i).is_zero() || (0..n).any(|j| (0..k).any(|a| !l.mixed(j, i, a).is_zero())) {
            return Err(unsupported());
        }
    }
    let h = hessian(l);
    let mut coeffs = vec![0.0; k];
    for (a, ca) in coeffs.iter_mut().enumerate() {
        for i in 0..n {
            for b in 0..k {
                for j in 0..n {
                    let g = h.get(a, i, b, j);
                    if g.any_symbol(&Symbol::is_coordinate) {
                        return Err(unsupported());
                    }
                    let v = g.eval(params).map_err(|source| NumError::Eval { point: Vec::new(), source })?;
                    let diagonal = a == b && i == j;
                    if !diagonal && v != 0.0 {
                        return Err(unsupported());
                    }
                    if diagonal {
                        if i > 0 && v != *ca {
                            return Err(unsupported());
                        }
                        *ca = v;
                    }
                }
            }
        }
    }
    if coeffs.contains(&0.0) {
        return Err(unsupported());
    }
    Ok(coeffs)
}

/// Solves the Euler–Lagrange equations of `l` on `grid`: leapfrog in `t1`
/// for hyperbolic problems, over-relaxation for elliptic ones.
pub fn solve_fd(l: &Lagrangian, grid: &Grid, params: &Assignment, data: &FdData) -> Result<FdSolution, NumError> {
    let c = l.chart();
    let (n, k) = (c.n(), c.k());
    if grid.k() != k {
        return Err(NumError::ShapeMismatch { expected: k, found: grid.k() });
    }
    let coeffs = diagonal_coefficients(l, params)?;
    let nodes = grid.len();
    let eval = |e: &Expr, node: usize| -> Result<f64, NumError> {
        let t = grid.point(node);
        let r = e.eval(&env_at(params, &t));
        r.map_err(|source| NumError::Eval { point: t, source })
    };
    let check_len = |v: &[Expr]| if v.len() == n { Ok(()) } else { Err(NumError::ShapeMismatch { expected: n, found: v.len() }) };
    let mut u = vec![0.0; nodes * n];
    let mut iterations = 0;
    match data {
        FdData::Hyperbolic { initial, velocity, boundary } => {
            check_len(initial)?;
            check_len(velocity)?;
            check_len(boundary)?;
            if coeffs[0] <= 0.0 || coeffs[1..].iter().any(|c| *c >= 0.0) {
                return Err(NumError::Unsupported("hyperbolic problems need c_1 > 0 > c_alpha for alpha > 1".into()));
            }
            let speeds: Vec<f64> = coeffs[1..].iter().map(|c| -c / coeffs[0]).collect();
            let ht = grid.h(0);
            let courant = (ht * ht * (1..k).map(|a| speeds[a - 1] / (grid.h(a) * grid.h(a))).sum::<f64>()).sqrt();
            if courant > 1.0 {
                return Err(NumError::CflViolation { courant });
            }
            let st = grid.stride(0);
            let lap = |u: &[f64], node: usize, i: usize| -> f64 {
                (1..k)
                    .map(|a| {
                        let (sa, ha) = (grid.stride(a), grid.h(a));
                        speeds[a - 1] * (u[(node + sa) * n + i] - 2.0 * u[node * n + i] + u[(node - sa) * n + i]) / (ha * ha)
                    })
                    .sum()
            };
            let on_face = |node: usize| grid.multi(node)[1..].iter().zip(&grid.counts[1..]).any(|(&i, &c)| i == 0 || i == c - 1);
            for node in 0..st {
                for i in 0..n {
                    u[node * n + i] = if on_face(node) { eval(&boundary[i], node)? } else { eval(&initial[i], node)? };
                }
            }
            for m in 1..grid.counts[0] {
                for node in m * st..(m + 1) * st {
                    for i in 0..n {
                        u[node * n + i] = if on_face(node) {
                            eval(&boundary[i], node)?
                        } else if m == 1 {
                            let prev = node - st;
                            u[prev * n + i] + ht * eval(&velocity[i], prev)? + 0.5 * ht * ht * lap(&u, prev, i)
                        } else {
                            let prev = node - st;
                            2.0 * u[prev * n + i] - u[(prev - st) * n + i] + ht * ht * lap(&u, prev, i)
                        };
                    }
                }
            }
        }
        FdData::Elliptic { boundary, tolerance, max_iterations } => {
            check_len(boundary)?;
            if coeffs.iter().any(|c| c.signum() != coeffs[0].signum()) {
                return Err(NumError::Unsupported("elliptic problems need all c_alpha of one sign".into()));
            }
            for node in 0..nodes {
                if grid.margin(node) == 0 {
                    for i in 0..n {
                        u[node * n + i] = eval(&boundary[i], node)?;
                    }
                }
            }
            let w: Vec<f64> = (0..k).map(|a| coeffs[a] / (grid.h(a) * grid.h(a))).collect();
            let diag: f64 = 2.0 * w.iter().sum::<f64>();
            let hmax = (0..k).map(|a| grid.h(a) / (grid.extent(a).1 - grid.extent(a).0)).fold(0.0, f64::max);
            let omega = 2.0 / (1.0 + (std::f64::consts::PI * hmax).sin());
            let interior: Vec<usize> = (0..nodes).filter(|&node| grid.margin(node) >= 1).collect();
            let residual = |u: &[f64]| -> f64 {
                let mut m = 0.0f64;
                for &node in &interior {
                    for i in 0..n {
                        let r: f64 = (0..k)
                            .map(|a| {
                                let sa = grid.stride(a);
                                w[a] * (u[(node + sa) * n + i] - 2.0 * u[node * n + i] + u[(node - sa) * n + i])
                            })
                            .sum();
                        m = m.max(r.abs());
                    }
                }
                m
            };
            loop {
                let r = residual(&u);
                if r <= *tolerance {
                    break;
                }
                if iterations >= *max_iterations {
                    return Err(NumError::NonConvergence { iterations, residual: r });
                }
                for &node in &interior {
                    for i in 0..n {
                        let nb: f64 = (0..k)
                            .map(|a| {
                                let sa = grid.stride(a);
                                w[a] * (u[(node + sa) * n + i] + u[(node - sa) * n + i])
                            })
                            .sum();
                        let gs = nb / diag;
                        u[node * n + i] += omega * (gs - u[node * n + i]);
                    }
                }
                iterations += 1;
            }
        }
    }
    let section = DiscreteSection::from_values(grid.clone(), n, u)?;
    let el = el_residual(&section, l, params)?;
    Ok(FdSolution { section, el, iterations })
}
