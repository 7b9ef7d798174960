//! Symmetries and conservation laws: Cartan, dynamical and Newtonoid
//! symmetries, the Newtonoid projector and `*`-product, Noether currents,
//! the converse reconstruction of a generating field, and the
//! Marmo–Mukunda criterion.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{Equality, Expr, Node, Symbol};
use crate::geometry::{apply_j, lie_bracket, Chart, VectorField};
use crate::lagrangian::{cartan_one_forms, cartan_two_forms, energy, is_regular, Lagrangian, OneForm, RegularityVerdict};
use crate::linsolve;
use crate::sopde::Sopde;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymmetryError {
    #[error("not a Cartan symmetry: {0}")]
    NotCartan(String),
    #[error("not a Newtonoid vector field for the given SOPDE")]
    NotNewtonoid,
    #[error("cannot reconstruct a potential for L_X theta^{}: {eta}", .alpha + 1)]
    PotentialReconstructionFailed { alpha: usize, eta: OneForm },
    #[error("the Lagrangian is singular")]
    SingularLagrangian,
    #[error("expected {expected} currents, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
}

/// `f = (f^1, ..., f^k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurrentTuple(pub Vec<Expr>);

impl CurrentTuple {
    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, alpha: usize) -> &Expr {
        &self.0[alpha]
    }

    pub fn equal(&self, other: &CurrentTuple) -> Equality {
        if self.k() != other.k() {
            return Equality::Unequal;
        }
        self.0.iter().zip(&other.0).fold(Equality::Symbolic, |g, (a, b)| g.and(a.equal(b)))
    }
}

impl fmt::Display for CurrentTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(Expr::to_string).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// A failing exactness condition `d(i_X omega^alpha)(d/da, d/db) != 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormWitness {
    pub alpha: usize,
    pub a: Symbol,
    pub b: Symbol,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartanReport {
    /// `X(E_L)`.
    pub energy_residual: Expr,
    pub energy: Equality,
    /// Closedness of `i_X omega^alpha`, i.e. `L_X omega^alpha = 0`.
    pub forms: Vec<Equality>,
    pub witness: Option<FormWitness>,
}

impl CartanReport {
    pub fn holds(&self) -> bool {
        self.energy.holds() && self.forms.iter().all(|g| g.holds())
    }

    pub fn grade(&self) -> Equality {
        self.forms.iter().fold(self.energy, |g, f| g.and(*f))
    }
}

/// Checks `L_X omega^alpha = d(i_X omega^alpha) = 0` and `X(E_L) = 0`.
pub fn cartan_report(x: &VectorField, l: &Lagrangian) -> CartanReport {
    let energy_residual = x.apply(&energy(l));
    let energy = energy_residual.zero_grade();
    let checks: Vec<_> = cartan_two_forms(l).par_iter().map(|om| om.interior(x).closedness()).collect();
    let witness = checks
        .iter()
        .enumerate()
        .find_map(|(alpha, (_, w))| w.clone().map(|(a, b, value)| FormWitness { alpha, a, b, value }));
    CartanReport { energy_residual, energy, forms: checks.into_iter().map(|(g, _)| g).collect(), witness }
}

pub fn is_cartan_symmetry(x: &VectorField, l: &Lagrangian) -> bool {
    cartan_report(x, l).holds()
}

/// The brackets `[xi_alpha, X]` that do not vanish.
pub fn dynamical_failures(x: &VectorField, xi: &Sopde) -> Vec<(usize, VectorField)> {
    (0..xi.chart().k())
        .into_par_iter()
        .map(|alpha| (alpha, lie_bracket(&xi.field(alpha), x)))
        .filter(|(_, b)| !b.zero_grade().holds())
        .collect()
}

/// `[xi_alpha, X] = 0` for every `alpha`.
pub fn is_dynamical_symmetry(x: &VectorField, xi: &Sopde) -> bool {
    dynamical_failures(x, xi).is_empty()
}

/// `pi_xi(X)`: base components `X^i`, fiber components `xi_alpha(X^i)`.
pub fn project_newtonoid(x: &VectorField, xi: &Sopde) -> VectorField {
    let k = xi.chart().k();
    VectorField {
        base: x.base.clone(),
        fiber: x.base.iter().map(|xi_i| (0..k).map(|alpha| xi.apply(alpha, xi_i)).collect()).collect(),
    }
}

/// Grade of `X^i_alpha = xi_alpha(X^i)`.
pub fn newtonoid_grade(x: &VectorField, xi: &Sopde) -> Equality {
    x.equal(&project_newtonoid(x, xi))
}

pub fn is_newtonoid(x: &VectorField, xi: &Sopde) -> bool {
    newtonoid_grade(x, xi).holds()
}

/// `f * X = f X + xi_alpha(f) J^alpha X`.
pub fn star_product(f: &Expr, x: &VectorField, xi: &Sopde) -> Result<VectorField, SymmetryError> {
    if !is_newtonoid(x, xi) {
        return Err(SymmetryError::NotNewtonoid);
    }
    let mut out = x.scale(f);
    for alpha in 0..xi.chart().k() {
        out = out.add(&apply_j(alpha, x).scale(&xi.apply(alpha, f)));
    }
    Ok(out)
}

/// Total degree of a canonical term in the coordinates, if it is a
/// monomial in them.
fn coordinate_degree(term: &Expr) -> Option<i64> {
    if !term.any_symbol(&Symbol::is_coordinate) {
        return Some(0);
    }
    match term.node() {
        Node::Sym(_) => Some(1),
        Node::Pow(b, n) if *n > 0 => coordinate_degree(b).filter(|d| *d == 1).map(|_| *n),
        Node::Mul(fs) => fs.iter().map(coordinate_degree).sum(),
        Node::Neg(e) => coordinate_degree(e),
        _ => None,
    }
}

/// A potential `g` with `dg = eta` and `g(0) = 0`, by radial homotopy
/// `g(p) = int_0^1 eta_A(t p) p^A dt`. Only coefficients polynomial in the
/// coordinates are integrated.
pub fn radial_potential(chart: &Chart, eta: &OneForm) -> Option<Expr> {
    let mut terms = Vec::new();
    for (s, c) in eta.components() {
        if c.zero_grade().holds() {
            continue;
        }
        for t in c.terms() {
            let d = coordinate_degree(&t)?;
            terms.push(&t * &Expr::sym(s.clone()) * Expr::rational(1, d + 1));
        }
    }
    let g = Expr::sum(terms);
    OneForm::exact(chart, &g).equal(eta).holds().then_some(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoetherResult {
    pub currents: CurrentTuple,
    /// `g^alpha` with `dg^alpha = L_X theta^alpha`.
    pub potentials: Vec<Expr>,
    /// `L_X theta^alpha = d(theta^alpha(X)) - i_X omega^alpha`.
    pub eta: Vec<OneForm>,
    /// Weakest grade of `dg^alpha = eta^alpha` and `f^alpha = theta^alpha(X) - g^alpha`.
    pub certificate: Equality,
    /// Grade of `i_X omega^alpha = df^alpha`.
    pub bridge: Equality,
}

/// Conserved currents `f^alpha = theta^alpha(X) - g^alpha` of a Cartan symmetry.
pub fn noether_current(x: &VectorField, l: &Lagrangian) -> Result<NoetherResult, SymmetryError> {
    let rep = cartan_report(x, l);
    if !rep.holds() {
        let why = match &rep.witness {
            Some(w) => format!("d(i_X omega^{}) has ({}) d{}^d{}", w.alpha + 1, w.value, w.a, w.b),
            None => format!("X(E_L) = {}", rep.energy_residual),
        };
        return Err(SymmetryError::NotCartan(why));
    }
    let c = l.chart();
    let thetas = cartan_one_forms(l);
    let omegas = cartan_two_forms(l);
    let mut currents = Vec::new();
    let mut potentials = Vec::new();
    let mut etas = Vec::new();
    let mut certificate = Equality::Symbolic;
    let mut bridge = Equality::Symbolic;
    for (alpha, (th, om)) in thetas.iter().zip(&omegas).enumerate() {
        let tx = th.contract(x);
        let ix = om.interior(x);
        let eta = OneForm::exact(c, &tx).sub(&ix);
        let g = radial_potential(c, &eta)
            .ok_or_else(|| SymmetryError::PotentialReconstructionFailed { alpha, eta: eta.clone() })?;
        let f = &tx - &g;
        certificate = certificate.and(OneForm::exact(c, &g).equal(&eta)).and((&f + &g).equal(&tx));
        bridge = bridge.and(ix.equal(&OneForm::exact(c, &f)));
        currents.push(f);
        potentials.push(g);
        etas.push(eta);
    }
    Ok(NoetherResult { currents: CurrentTuple(currents), potentials, eta: etas, certificate, bridge })
}

/// `sum_alpha xi_alpha(f^alpha)`.
pub fn conservation_residual(f: &CurrentTuple, xi: &Sopde) -> Expr {
    xi.divergence(&f.0)
}

/// Grade of `sum_alpha xi_alpha(f^alpha) = 0`.
pub fn conservation_grade(f: &CurrentTuple, xi: &Sopde) -> Equality {
    conservation_residual(f, xi).zero_grade()
}

pub fn conservation_check_sopde(f: &CurrentTuple, xi: &Sopde) -> bool {
    conservation_grade(f, xi).holds()
}

/// The first equation of `i_X omega^alpha = df^alpha` that cannot hold,
/// named by the component of `df^alpha` it matches.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub alpha: usize,
    pub component: Symbol,
    /// The raw derivative when the equation has no unknowns, otherwise the
    /// residual after elimination.
    pub value: Expr,
    pub raw: bool,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.raw {
            write!(f, "df{}/d{} must vanish but equals {}", self.alpha + 1, self.component, self.value)
        } else {
            write!(f, "equation for df{}/d{} leaves residual {} after elimination", self.alpha + 1, self.component, self.value)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorVerdict {
    Unique(VectorField),
    Family { particular: VectorField, kernel: Vec<VectorField> },
    Inconsistent(Witness),
}

impl GeneratorVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            GeneratorVerdict::Unique(_) => "unique",
            GeneratorVerdict::Family { .. } => "family",
            GeneratorVerdict::Inconsistent(_) => "inconsistent",
        }
    }

    pub fn particular(&self) -> Option<&VectorField> {
        match self {
            GeneratorVerdict::Unique(x) | GeneratorVerdict::Family { particular: x, .. } => Some(x),
            GeneratorVerdict::Inconsistent(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSolution {
    pub verdict: GeneratorVerdict,
    /// Non-constant pivots the elimination divided by, each assumed non-zero.
    pub assumptions: Vec<Expr>,
    /// Grade of `i_X omega^alpha - df^alpha = 0` for the particular field
    /// (and the homogeneous equations for the kernel); `Unequal` when
    /// inconsistent.
    pub grade: Equality,
}

/// Solves `i_X omega^alpha = df^alpha` for `X`: first the `dv` block
/// `g^{alpha beta}_ij X^i = df^alpha/dv^j_beta` for the base components, then
/// the `dq` block for the fiber components.
pub fn generating_field(f: &CurrentTuple, l: &Lagrangian) -> Result<GeneratorSolution, SymmetryError> {
    let c = l.chart();
    let (n, k) = (c.n(), c.k());
    if f.k() != k {
        return Err(SymmetryError::ShapeMismatch { expected: k, found: f.k() });
    }
    if is_regular(l).verdict == RegularityVerdict::Singular {
        return Err(SymmetryError::SingularLagrangian);
    }
    let omegas = cartan_two_forms(l);
    let df: Vec<OneForm> = f.0.iter().map(|fa| OneForm::exact(c, fa)).collect();

    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let mut labels = Vec::new();
    for (alpha, om) in omegas.iter().enumerate() {
        for j in 0..n {
            for beta in 0..k {
                rows.push((0..n).map(|i| om.g[i][j][beta].clone()).collect());
                rhs.push(df[alpha].dv[j][beta].clone());
                labels.push((alpha, Symbol::Velocity { i: j, alpha: beta }));
            }
        }
    }
    let first = match linsolve::solve(&rows, &rhs) {
        Ok(s) => s,
        Err(e) => return Ok(inconsistent(&labels, e)),
    };

    // Second block in the unknowns (t, X^j_beta), with X^i = p^i + N^i_r t_r:
    // -2 a_mj X^j - g_mj^beta X^j_beta = df^alpha/dq^m.
    let free = first.kernel.len();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let mut labels = Vec::new();
    for (alpha, om) in omegas.iter().enumerate() {
        for m in 0..n {
            let mut row: Vec<Expr> = (0..free)
                .map(|r| Expr::sum((0..n).map(|j| Expr::int(-2) * &om.a[m][j] * &first.kernel[r][j])))
                .collect();
            for j in 0..n {
                for beta in 0..k {
                    row.push(-&om.g[m][j][beta]);
                }
            }
            rows.push(row);
            rhs.push(&df[alpha].dq[m] + Expr::sum((0..n).map(|j| Expr::int(2) * &om.a[m][j] * &first.particular[j])));
            labels.push((alpha, Symbol::Base(m)));
        }
    }
    let second = match linsolve::solve(&rows, &rhs) {
        Ok(s) => s,
        Err(e) => {
            let mut sol = inconsistent(&labels, e);
            sol.assumptions = normalize(first.assumptions);
            return Ok(sol);
        }
    };

    let assemble = |t: &[Expr], y: &[Expr], homogeneous: bool| {
        let base = (0..n)
            .map(|i| {
                let p = if homogeneous { Expr::zero() } else { first.particular[i].clone() };
                p + Expr::sum((0..free).map(|r| &first.kernel[r][i] * &t[r]))
            })
            .collect();
        let fiber = (0..n).map(|j| (0..k).map(|beta| y[j * k + beta].canon()).collect()).collect();
        VectorField { base, fiber }
    };
    let particular = assemble(&second.particular[..free], &second.particular[free..], false);
    let kernel: Vec<VectorField> = second.kernel.iter().map(|v| assemble(&v[..free], &v[free..], true)).collect();

    let mut grade = first.grade.and(second.grade);
    for (alpha, om) in omegas.iter().enumerate() {
        grade = grade.and(om.interior(&particular).equal(&df[alpha]));
        for z in &kernel {
            grade = grade.and(om.interior(z).zero_grade());
        }
    }
    let assumptions = normalize(first.assumptions.into_iter().chain(second.assumptions));
    let verdict = if kernel.is_empty() {
        GeneratorVerdict::Unique(particular)
    } else {
        GeneratorVerdict::Family { particular, kernel }
    };
    Ok(GeneratorSolution { verdict, assumptions, grade })
}

/// Sign-normalized, deduplicated pivots.
fn normalize(pivots: impl IntoIterator<Item = Expr>) -> Vec<Expr> {
    let mut out: Vec<Expr> = Vec::new();
    for p in pivots {
        let p = if p.terms().first().is_some_and(Expr::is_negative_term) { (-p).canon() } else { p };
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

fn inconsistent(labels: &[(usize, Symbol)], e: linsolve::Conflict) -> GeneratorSolution {
    let (alpha, component) = labels[e.row].clone();
    GeneratorSolution {
        verdict: GeneratorVerdict::Inconsistent(Witness { alpha, component, value: e.residual, raw: e.raw }),
        assumptions: Vec::new(),
        grade: Equality::Unequal,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MMReport {
    pub holds: bool,
    /// `pi_xi(X) = 0`, i.e. `X` is vertical and the condition is vacuous.
    pub zero_field: bool,
    /// `pi_xi(X)(L) - xi_alpha(g^alpha)` with every `xi^j_{alpha beta}` set to zero.
    pub constant_term: Expr,
    /// Coefficient of each formal `xi^j_{alpha beta}`, `alpha <= beta`, zero-based.
    pub coefficients: Vec<((usize, usize, usize), Expr)>,
    /// `pi_xi(X)` for the supplied SOPDE, when the condition holds.
    pub cartan_field: Option<VectorField>,
    /// `f^alpha = theta^alpha(X) - g^alpha`.
    pub currents: CurrentTuple,
    pub grade: Equality,
}

/// Decides `pi_xi(X)(L) = xi_alpha(g^alpha)` for every SOPDE by expanding in
/// formal symmetric coefficients `xi^j_{alpha beta}`.
pub fn marmo_mukunda_check(x: &VectorField, g: &[Expr], l: &Lagrangian, xi: Option<&Sopde>) -> MMReport {
    let c = l.chart();
    let (n, k) = (c.n(), c.k());
    let formal = Sopde::formal(c);
    let residual = (project_newtonoid(x, &formal).apply(l.expr()) - formal.divergence(g)).canon();
    let symbols: Vec<(usize, usize, usize)> =
        (0..n).flat_map(|j| (0..k).flat_map(move |a| (a..k).map(move |b| (j, a, b)))).collect();
    let constant_term = residual.substitute(&|s| matches!(s, Symbol::Coeff { .. }).then(Expr::zero));
    let coefficients: Vec<((usize, usize, usize), Expr)> =
        symbols.par_iter().map(|&(j, a, b)| ((j, a, b), residual.diff(&Symbol::coeff(j, a, b)))).collect();
    let grade = coefficients.iter().fold(constant_term.zero_grade(), |g, (_, e)| g.and(e.zero_grade()));
    let holds = grade.holds();
    let currents = CurrentTuple(
        cartan_one_forms(l).iter().zip(g.iter().chain(std::iter::repeat(&Expr::zero()))).map(|(th, ga)| th.contract(x) - ga).collect(),
    );
    let cartan_field = if holds { xi.map(|s| project_newtonoid(x, s)) } else { None };
    MMReport { holds, zero_field: x.base.iter().all(Expr::is_zero), constant_term, coefficients, cartan_field, currents, grade }
}

#[cfg(test)]
mod tests;
