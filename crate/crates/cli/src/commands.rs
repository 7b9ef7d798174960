//! Subcommand bodies. Each returns a [`Report`]; usage and input errors are
//! returned as [`CliError`].

use ksym_core::expr::{Equality, Expr, Symbol};
use ksym_core::geometry::{lie_bracket, VectorField};
use ksym_core::lagrangian::{
    cartan_one_forms, cartan_two_forms, energy, hessian, is_regular, Grade as RegularityGrade, Lagrangian, OneForm, RegularityVerdict, TwoForm,
};
use ksym_core::sopde::{first_block_residual, in_xkl, integrability_report, xkl_residual, Sopde};
use ksym_core::symmetry::{
    cartan_report, conservation_grade, conservation_residual, generating_field, is_newtonoid, marmo_mukunda_check, newtonoid_grade,
    noether_current, project_newtonoid, CurrentTuple, GeneratorVerdict, SymmetryError,
};
use thiserror::Error;

use crate::problem::{Problem, ProblemError};
use crate::report::{Grade, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// `field[coordinate] = component` for the non-zero components.
pub(crate) fn field_objects(r: &mut Report, name: &str, x: &VectorField) {
    let comps: Vec<_> = x.components().into_iter().filter(|(_, c)| !c.is_zero()).collect();
    if comps.is_empty() {
        r.object(format!("{name}[q1]"), Expr::zero());
    }
    for (s, c) in comps {
        r.object(format!("{name}[{s}]"), c);
    }
}

fn one_form_objects(r: &mut Report, name: &str, w: &OneForm) {
    let comps: Vec<_> = w.components().into_iter().filter(|(_, c)| !c.is_zero()).collect();
    if comps.is_empty() {
        r.object(format!("{name}[dq1]"), Expr::zero());
    }
    for (s, c) in comps {
        r.object(format!("{name}[d{s}]"), c);
    }
}

/// Non-zero coefficients of `omega` on `dq^i ^ dq^j` (`i < j`) and `dq^i ^ dv^j_beta`.
pub fn two_form_components(w: &TwoForm) -> Vec<(String, Expr)> {
    let n = w.a.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let c = Expr::int(2) * &w.a[i][j];
            if !c.is_zero() {
                out.push((format!("dq{}^dq{}", i + 1, j + 1), c));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for (beta, c) in w.g[i][j].iter().enumerate() {
                if !c.is_zero() {
                    out.push((format!("dq{}^dv{}_{}", i + 1, j + 1, beta + 1), c.clone()));
                }
            }
        }
    }
    out
}

fn current_objects(r: &mut Report, prefix: &str, f: &CurrentTuple) {
    for (a, e) in f.0.iter().enumerate() {
        r.object(format!("{prefix}{}", a + 1), e);
    }
}

pub fn analyze(p: &Problem) -> Report {
    let l = &p.lagrangian;
    let c = p.chart();
    let mut r = Report::new("analyze");
    r.input("problem", &p.name);
    r.input("k", c.k());
    r.input("n", c.n());
    r.object("L", l.expr());
    for theta in cartan_one_forms(l) {
        for (i, e) in theta.coeffs.iter().enumerate() {
            if !e.is_zero() {
                r.object(format!("theta{}[dq{}]", theta.alpha + 1, i + 1), e);
            }
        }
    }
    for w in cartan_two_forms(l) {
        let comps = two_form_components(&w);
        if comps.is_empty() {
            r.object(format!("omega{}[dq1^dv1_1]", w.alpha + 1), Expr::zero());
        }
        for (key, e) in comps {
            r.object(format!("omega{}[{key}]", w.alpha + 1), e);
        }
    }
    let e = energy(l);
    r.object("E", &e);
    one_form_objects(&mut r, "dE", &OneForm::exact(c, &e));
    let h = hessian(l);
    let (k, n) = (c.k(), c.n());
    for alpha in 0..k {
        for i in 0..n {
            for beta in 0..k {
                for j in 0..n {
                    let g = h.get(alpha, i, beta, j);
                    if !g.is_zero() {
                        r.object(format!("hessian[v{}_{},v{}_{}]", i + 1, alpha + 1, j + 1, beta + 1), g);
                    }
                }
            }
        }
    }
    let reg = is_regular(l);
    if let Some(d) = &reg.determinant {
        r.object("hessian.det", d);
    }
    let grade = match reg.grade {
        RegularityGrade::Symbolic => Grade::Symbolic,
        RegularityGrade::Numeric => Grade::Numeric,
    };
    let detail = match (&reg.verdict, &reg.assumption, &reg.witness) {
        (RegularityVerdict::Regular, Some(a), _) => Some(format!("(assuming {a})")),
        (RegularityVerdict::Undecided, _, Some(w)) => Some(format!("(determinant vanishes at {w:?})")),
        (RegularityVerdict::Undecided, _, None) => Some("(undecided)".to_string()),
        _ => None,
    };
    r.verdict("regular", reg.verdict == RegularityVerdict::Regular, grade, detail);
    r
}

fn conservation(r: &mut Report, p: &Problem, xi: &Sopde, currents: &[String]) -> Result<(), CliError> {
    for name in currents {
        let f = p.current(name)?;
        r.object(format!("divergence[{name}]"), conservation_residual(f, xi));
        r.equality(&format!("conserved[{name}]"), conservation_grade(f, xi));
    }
    Ok(())
}

pub fn check_sopde(p: &Problem, sopde: Option<&str>, currents: &[String]) -> Result<Report, CliError> {
    let name = match sopde {
        Some(s) => s,
        None => p.sole_sopde()?,
    };
    let xi = p.sopde(name)?;
    let l = &p.lagrangian;
    let c = p.chart();
    let mut r = Report::new("check-sopde");
    r.input("problem", &p.name);
    r.input("sopde", name);
    for i in 0..c.n() {
        for a in 0..c.k() {
            for b in 0..c.k() {
                r.object(format!("xi{}_{}_{}", i + 1, a + 1, b + 1), xi.coeff(i, a, b));
            }
        }
    }
    for (i, e) in first_block_residual(xi, l).iter().enumerate() {
        r.object(format!("el.residual[{}]", i + 1), e);
    }
    let residual = xkl_residual(xi, l);
    for (i, e) in residual.iter().enumerate() {
        r.object(format!("xkl.residual[{}]", i + 1), e);
    }
    r.equality("in_xkl", in_xkl(xi, l));
    let rep = integrability_report(xi);
    let g = Grade::of(rep.grade);
    r.verdict("symmetric", rep.symmetric, if rep.symmetric { g } else { Grade::Symbolic }, None);
    r.verdict("closure", rep.closure, if rep.closure { g } else { Grade::Numeric }, None);
    r.verdict("brackets_vanish", rep.brackets_vanish, if rep.brackets_vanish { g } else { Grade::Numeric }, None);
    for (i, a, b) in &rep.symmetric_failures {
        r.witness(format!("xi{i}_{a}_{b} != xi{i}_{b}_{a}", i = i + 1, a = a + 1, b = b + 1));
    }
    for f in &rep.closure_failures {
        r.witness(format!(
            "xi_{}(xi{}_{}_{}) - xi_{}(xi{}_{}_{}) = {}",
            f.alpha + 1,
            f.i + 1,
            f.beta + 1,
            f.gamma + 1,
            f.beta + 1,
            f.i + 1,
            f.alpha + 1,
            f.gamma + 1,
            f.residual
        ));
    }
    for (a, b) in &rep.bracket_failures {
        r.witness(format!("[xi_{}, xi_{}] != 0", a + 1, b + 1));
    }
    conservation(&mut r, p, xi, currents)?;
    Ok(r)
}

fn dynamical(r: &mut Report, x: &VectorField, xi: &Sopde) {
    let mut grade = Equality::Symbolic;
    for alpha in 0..xi.chart().k() {
        let b = lie_bracket(&xi.field(alpha), x);
        let g = b.zero_grade();
        if !g.holds() {
            r.witness(format!("[xi_{}, X] = {b}", alpha + 1));
        }
        grade = grade.and(g);
    }
    r.equality("dynamical", grade);
}

pub fn check_symmetry(p: &Problem, field: &str, sopde: Option<&str>) -> Result<Report, CliError> {
    let x = p.field(field)?.field;
    let l = &p.lagrangian;
    let mut r = Report::new("check-symmetry");
    r.input("problem", &p.name);
    r.input("field", field);
    if let Some(s) = sopde {
        r.input("sopde", s);
    }
    field_objects(&mut r, "X", &x);
    let cr = cartan_report(&x, l);
    r.object("X(E)", &cr.energy_residual);
    r.equality("energy_conserved", cr.energy);
    for (a, g) in cr.forms.iter().enumerate() {
        r.equality(&format!("preserves_omega{}", a + 1), *g);
    }
    if let Some(w) = &cr.witness {
        r.witness(format!("d(i_X omega{}) has coefficient {} on d{}^d{}", w.alpha + 1, w.value, w.a, w.b));
    }
    r.verdict("cartan", cr.holds(), Grade::of(cr.grade()), None);
    if let Some(s) = sopde {
        let xi = p.sopde(s)?;
        let g = newtonoid_grade(&x, xi);
        r.equality("newtonoid", g);
        if !g.holds() {
            field_objects(&mut r, "pi(X)", &project_newtonoid(&x, xi));
        }
        dynamical(&mut r, &x, xi);
    }
    Ok(r)
}

pub fn noether(p: &Problem, field: &str, current: Option<&str>, sopde: Option<&str>) -> Result<Report, CliError> {
    let fx = p.field(field)?;
    let l = &p.lagrangian;
    let mut r = Report::new("noether");
    r.input("problem", &p.name);
    r.input("field", field);
    field_objects(&mut r, "X", &fx.field);
    match noether_current(&fx.field, l) {
        Ok(res) => {
            r.verdict("cartan", true, Grade::Symbolic, None);
            current_objects(&mut r, "f", &res.currents);
            for (a, g) in res.potentials.iter().enumerate() {
                r.object(format!("g{}", a + 1), g);
            }
            r.equality("potential", res.certificate);
            r.equality("energy_bridge", res.bridge);
            if let Some(name) = current {
                r.input("current", name);
                r.equality(&format!("matches[{name}]"), res.currents.equal(p.current(name)?));
            }
            if let Some(s) = sopde {
                r.input("sopde", s);
                let xi = p.sopde(s)?;
                r.object("divergence", conservation_residual(&res.currents, xi));
                r.equality("conserved", conservation_grade(&res.currents, xi));
            }
        }
        Err(SymmetryError::NotCartan(why)) => {
            r.verdict("cartan", false, Grade::Numeric, Some(format!("({why})")));
        }
        Err(SymmetryError::PotentialReconstructionFailed { alpha, eta }) => {
            r.verdict("cartan", true, Grade::Symbolic, None);
            one_form_objects(&mut r, &format!("eta{}", alpha + 1), &eta);
            r.verdict("potential", false, Grade::Symbolic, Some(format!("(no polynomial potential for L_X theta{})", alpha + 1)));
        }
        Err(e) => return Err(usage(e.to_string())),
    }
    Ok(r)
}

fn regular_or_report(r: &mut Report, l: &Lagrangian) -> bool {
    let reg = is_regular(l);
    if reg.verdict == RegularityVerdict::Singular {
        r.verdict("regular", false, Grade::Symbolic, None);
        return false;
    }
    true
}

pub fn generate_field(p: &Problem, current: &str, field: Option<&str>) -> Result<Report, CliError> {
    let f = p.current(current)?;
    let l = &p.lagrangian;
    let mut r = Report::new("generate-field");
    r.input("problem", &p.name);
    r.input("current", current);
    current_objects(&mut r, "f", f);
    if !regular_or_report(&mut r, l) {
        return Ok(r);
    }
    let sol = match generating_field(f, l) {
        Ok(s) => s,
        Err(SymmetryError::SingularLagrangian) => {
            r.verdict("regular", false, Grade::Symbolic, None);
            return Ok(r);
        }
        Err(e) => return Err(usage(e.to_string())),
    };
    for (m, a) in sol.assumptions.iter().enumerate() {
        r.object(format!("assume_nonzero{}", m + 1), a);
    }
    match &sol.verdict {
        GeneratorVerdict::Inconsistent(w) => {
            r.verdict("generated", false, Grade::Symbolic, Some("(inconsistent)".into()));
            r.witness(w);
        }
        GeneratorVerdict::Unique(x) | GeneratorVerdict::Family { particular: x, .. } => {
            r.verdict("generated", true, Grade::of(sol.grade), Some(format!("({})", sol.verdict.label())));
            field_objects(&mut r, "X", x);
            if let GeneratorVerdict::Family { kernel, .. } = &sol.verdict {
                for (m, z) in kernel.iter().enumerate() {
                    field_objects(&mut r, &format!("kernel{}", m + 1), z);
                }
            }
            let cr = cartan_report(x, l);
            r.verdict("cartan", cr.holds(), Grade::of(cr.grade()), None);
            if let Some(name) = field {
                r.input("field", name);
                r.equality(&format!("matches[{name}]"), x.equal(&p.field(name)?.field));
            }
        }
    }
    Ok(r)
}

pub fn marmo(p: &Problem, field: &str, sopde: Option<&str>) -> Result<Report, CliError> {
    let fx = p.field(field)?;
    let l = &p.lagrangian;
    let mut r = Report::new("marmo");
    r.input("problem", &p.name);
    r.input("field", field);
    let xi = match sopde {
        Some(s) => {
            r.input("sopde", s);
            Some(p.sopde(s)?)
        }
        None => None,
    };
    field_objects(&mut r, "X", &fx.field);
    for (a, g) in fx.potentials.iter().enumerate() {
        r.object(format!("g{}", a + 1), g);
    }
    let mm = marmo_mukunda_check(&fx.field, &fx.potentials, l, xi);
    r.object("constant_term", &mm.constant_term);
    for ((i, a, b), e) in &mm.coefficients {
        r.object(format!("coefficient[{}]", Symbol::coeff(*i, *a, *b)), e);
    }
    current_objects(&mut r, "f", &mm.currents);
    if let Some(z) = &mm.cartan_field {
        field_objects(&mut r, "cartan", z);
    }
    if mm.zero_field {
        r.note("the field has no base part; the identity holds vacuously");
    }
    r.verdict("marmo_mukunda", mm.holds, Grade::of(mm.grade), None);
    if let (Some(z), Some(xi)) = (&mm.cartan_field, xi) {
        r.equality("newtonoid", if is_newtonoid(z, xi) { newtonoid_grade(z, xi) } else { Equality::Unequal });
    }
    Ok(r)
}
