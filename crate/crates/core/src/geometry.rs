//! The chart of `T^1_k Q` and its canonical operators: the k-tangent
//! structure `J^alpha`, the Liouville field, Lie brackets and lifts.

use std::fmt;

use thiserror::Error;

use crate::expr::{self, Equality, Expr, ExprError, Symbol, SymbolTable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid dimensions k = {k}, n = {n}; both must be at least 1")]
    InvalidDimension { k: usize, n: usize },
    #[error("parameter name `{0}` clashes with a coordinate, function or another parameter")]
    NameClash(String),
    #[error("`{0}` is not a valid identifier")]
    InvalidName(String),
    #[error("vector field is not basic: {0}")]
    NotBasic(String),
    #[error("direction {alpha} out of range 1..={k}")]
    DirectionOutOfRange { alpha: usize, k: usize },
    #[error("expected {expected} components, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Global chart `(q^i, v^i_alpha)` on `T^1_k Q`, `dim Q = n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chart {
    k: usize,
    n: usize,
    params: Vec<String>,
}

impl Chart {
    pub fn new<S: AsRef<str>>(k: usize, n: usize, params: &[S]) -> Result<Chart, GeometryError> {
        if k == 0 || n == 0 {
            return Err(GeometryError::InvalidDimension { k, n });
        }
        let mut names: Vec<String> = Vec::with_capacity(params.len());
        for p in params {
            let p = p.as_ref();
            if !expr::is_identifier(p) {
                return Err(GeometryError::InvalidName(p.to_string()));
            }
            if expr::is_reserved(p) || names.iter().any(|x| x == p) {
                return Err(GeometryError::NameClash(p.to_string()));
            }
            names.push(p.to_string());
        }
        Ok(Chart { k, n, params: names })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn table(&self) -> SymbolTable {
        SymbolTable::new(self.k, self.n, self.params.iter().cloned())
    }

    /// Parses and canonicalizes an expression over the chart coordinates and
    /// parameters.
    pub fn parse(&self, text: &str) -> Result<Expr, ExprError> {
        expr::parse(text, &self.table())?.simplify()
    }

    /// Base coordinates followed by fibre coordinates, `alpha` fastest.
    pub fn coordinates(&self) -> Vec<Symbol> {
        let mut out: Vec<Symbol> = (0..self.n).map(Symbol::Base).collect();
        for i in 0..self.n {
            for alpha in 0..self.k {
                out.push(Symbol::Velocity { i, alpha });
            }
        }
        out
    }

    /// True if every symbol of `e` is a chart coordinate or parameter.
    pub fn owns(&self, e: &Expr) -> bool {
        e.free_symbols().iter().all(|s| match s {
            Symbol::Param(p) => self.params.iter().any(|x| **x == **p),
            Symbol::Base(i) => *i < self.n,
            Symbol::Velocity { i, alpha } => *i < self.n && *alpha < self.k,
            _ => false,
        })
    }

    pub fn check_direction(&self, alpha: usize) -> Result<(), GeometryError> {
        if alpha < self.k {
            Ok(())
        } else {
            Err(GeometryError::DirectionOutOfRange { alpha: alpha + 1, k: self.k })
        }
    }
}

/// `X = X^i d/dq^i + X^i_alpha d/dv^i_alpha`.
///
/// `fiber[i][alpha]` holds `X^i_alpha`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VectorField {
    pub base: Vec<Expr>,
    pub fiber: Vec<Vec<Expr>>,
}

impl VectorField {
    pub fn zero(chart: &Chart) -> VectorField {
        VectorField { base: vec![Expr::zero(); chart.n], fiber: vec![vec![Expr::zero(); chart.k]; chart.n] }
    }

    /// Builds a field, canonicalizing every component.
    pub fn new(chart: &Chart, base: Vec<Expr>, fiber: Vec<Vec<Expr>>) -> Result<VectorField, GeometryError> {
        if base.len() != chart.n {
            return Err(GeometryError::ShapeMismatch { expected: chart.n, found: base.len() });
        }
        if fiber.len() != chart.n {
            return Err(GeometryError::ShapeMismatch { expected: chart.n, found: fiber.len() });
        }
        for row in &fiber {
            if row.len() != chart.k {
                return Err(GeometryError::ShapeMismatch { expected: chart.k, found: row.len() });
            }
        }
        let base = base.iter().map(Expr::simplify).collect::<Result<_, _>>()?;
        let fiber = fiber.iter().map(|r| r.iter().map(Expr::simplify).collect::<Result<_, _>>()).collect::<Result<_, _>>()?;
        Ok(VectorField { base, fiber })
    }

    /// A field with only base components.
    pub fn from_base(chart: &Chart, base: Vec<Expr>) -> Result<VectorField, GeometryError> {
        VectorField::new(chart, base, vec![vec![Expr::zero(); chart.k]; chart.n])
    }

    /// `d/dq^i`.
    pub fn dq(chart: &Chart, i: usize) -> VectorField {
        let mut x = VectorField::zero(chart);
        x.base[i] = Expr::one();
        x
    }

    /// `d/dv^i_alpha`.
    pub fn dv(chart: &Chart, i: usize, alpha: usize) -> VectorField {
        let mut x = VectorField::zero(chart);
        x.fiber[i][alpha] = Expr::one();
        x
    }

    pub fn n(&self) -> usize {
        self.base.len()
    }

    pub fn k(&self) -> usize {
        self.fiber.first().map_or(0, Vec::len)
    }

    /// Pairs `(coordinate, component)` for all non-zero components.
    pub fn components(&self) -> Vec<(Symbol, Expr)> {
        let mut out = Vec::new();
        for (i, c) in self.base.iter().enumerate() {
            if !c.is_zero() {
                out.push((Symbol::Base(i), c.clone()));
            }
        }
        for (i, row) in self.fiber.iter().enumerate() {
            for (alpha, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    out.push((Symbol::Velocity { i, alpha }, c.clone()));
                }
            }
        }
        out
    }

    /// Every component in coordinate order, zero or not.
    pub fn all_components(&self) -> impl Iterator<Item = &Expr> {
        self.base.iter().chain(self.fiber.iter().flatten())
    }

    /// `X(f)`: the field acting as a derivation.
    pub fn apply(&self, f: &Expr) -> Expr {
        f.derive_along(&self.components())
    }

    pub fn map(&self, op: impl Fn(&Expr) -> Expr) -> VectorField {
        VectorField {
            base: self.base.iter().map(&op).collect(),
            fiber: self.fiber.iter().map(|r| r.iter().map(&op).collect()).collect(),
        }
    }

    fn zip(&self, other: &VectorField, op: impl Fn(&Expr, &Expr) -> Expr) -> VectorField {
        VectorField {
            base: self.base.iter().zip(&other.base).map(|(a, b)| op(a, b)).collect(),
            fiber: self
                .fiber
                .iter()
                .zip(&other.fiber)
                .map(|(r, s)| r.iter().zip(s).map(|(a, b)| op(a, b)).collect())
                .collect(),
        }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        self.zip(other, |a, b| a - b)
    }

    /// `f X`.
    pub fn scale(&self, f: &Expr) -> VectorField {
        self.map(|c| f * c)
    }

    pub fn is_zero(&self) -> bool {
        self.all_components().all(Expr::is_zero)
    }

    pub fn is_vertical(&self) -> bool {
        self.base.iter().all(Expr::is_zero)
    }

    /// True for fields on `Q`: base components in `q` only, no fibre part.
    pub fn is_basic(&self) -> bool {
        self.fiber.iter().flatten().all(Expr::is_zero)
            && self.base.iter().all(|c| !c.any_symbol(&|s| !matches!(s, Symbol::Base(_) | Symbol::Param(_))))
    }

    /// Component-wise equality, with the weakest grade over all components.
    pub fn equal(&self, other: &VectorField) -> Equality {
        self.all_components().zip(other.all_components()).fold(Equality::Symbolic, |g, (a, b)| g.and(a.equal(b)))
    }

    /// Grade of `self == 0`.
    pub fn zero_grade(&self) -> Equality {
        self.all_components().fold(Equality::Symbolic, |g, c| g.and(c.zero_grade()))
    }
}

impl fmt::Display for VectorField {
    /// Written as `base: X^1, ..; fiber: X^1_1, X^1_2, ..` in coordinate order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base: Vec<String> = self.base.iter().map(Expr::to_string).collect();
        let fiber: Vec<String> = self.fiber.iter().flatten().map(Expr::to_string).collect();
        write!(f, "base: {}; fiber: {}", base.join(", "), fiber.join(", "))
    }
}

/// A k-tuple `(xi_1, .., xi_k)` of vector fields on `T^1_k Q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KVectorField(pub Vec<VectorField>);

impl KVectorField {
    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, alpha: usize) -> &VectorField {
        &self.0[alpha]
    }
}

/// Liouville field `C = v^i_alpha d/dv^i_alpha`.
pub fn liouville(chart: &Chart) -> VectorField {
    let mut x = VectorField::zero(chart);
    for i in 0..chart.n {
        for alpha in 0..chart.k {
            x.fiber[i][alpha] = Expr::v(i, alpha);
        }
    }
    x
}

/// `J^alpha X`: the base components of `X` moved into direction `alpha`.
pub fn apply_j(alpha: usize, x: &VectorField) -> VectorField {
    let (n, k) = (x.n(), x.k());
    assert!(alpha < k, "direction {alpha} out of range");
    let mut fiber = vec![vec![Expr::zero(); k]; n];
    for (row, b) in fiber.iter_mut().zip(&x.base) {
        row[alpha] = b.clone();
    }
    VectorField { base: vec![Expr::zero(); n], fiber }
}

/// `sum_alpha J^alpha xi_alpha`.
pub fn sum_j(xi: &KVectorField) -> VectorField {
    let first = &xi.0[0];
    let mut acc = VectorField { base: vec![Expr::zero(); first.n()], fiber: vec![vec![Expr::zero(); first.k()]; first.n()] };
    for (alpha, x) in xi.0.iter().enumerate() {
        acc = acc.add(&apply_j(alpha, x));
    }
    acc
}

/// `[X, Y]^A = X(Y^A) - Y(X^A)`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> VectorField {
    let (xc, yc) = (x.components(), y.components());
    x.zip(y, |xa, ya| ya.derive_along(&xc) - xa.derive_along(&yc))
}

/// `Z^C = Z^i d/dq^i + v^i_alpha dZ^j/dq^i d/dv^j_alpha`.
pub fn complete_lift(z: &VectorField) -> Result<VectorField, GeometryError> {
    if !z.is_basic() {
        return Err(GeometryError::NotBasic(z.to_string()));
    }
    let (n, k) = (z.n(), z.k());
    let mut out = z.clone();
    for j in 0..n {
        for alpha in 0..k {
            out.fiber[j][alpha] = Expr::sum((0..n).map(|i| Expr::v(i, alpha) * z.base[j].diff(&Symbol::Base(i))));
        }
    }
    Ok(out)
}

/// `Z^{V_alpha} = J^alpha Z^C`.
pub fn vertical_lift(z: &VectorField, alpha: usize) -> Result<VectorField, GeometryError> {
    Ok(apply_j(alpha, &complete_lift(z)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{arb_basic_field, arb_field};
    use proptest::prelude::*;

    fn string_chart() -> Chart {
        Chart::new(2, 1, &["sigma", "tau"]).unwrap()
    }

    #[test]
    fn charts_of_the_catalog() {
        assert!(Chart::new(2, 1, &["sigma", "tau"]).is_ok());
        assert!(Chart::new(3, 1, &["c"]).is_ok());
        assert!(Chart::new(2, 2, &["lambda", "nu"]).is_ok());
    }

    #[test]
    fn chart_errors() {
        assert_eq!(Chart::new(0, 1, &[] as &[&str]), Err(GeometryError::InvalidDimension { k: 0, n: 1 }));
        assert_eq!(Chart::new(1, 1, &["q1"]), Err(GeometryError::NameClash("q1".into())));
        assert_eq!(Chart::new(1, 1, &["v1_1"]), Err(GeometryError::NameClash("v1_1".into())));
        assert_eq!(Chart::new(1, 1, &["sin"]), Err(GeometryError::NameClash("sin".into())));
        assert_eq!(Chart::new(1, 1, &["a", "a"]), Err(GeometryError::NameClash("a".into())));
        assert_eq!(Chart::new(1, 1, &["2x"]), Err(GeometryError::InvalidName("2x".into())));
    }

    #[test]
    fn liouville_examples() {
        let c = liouville(&string_chart());
        assert_eq!(c.to_string(), "base: 0; fiber: v1_1, v1_2");
        let c1 = liouville(&Chart::new(1, 1, &[] as &[&str]).unwrap());
        assert_eq!(c1.to_string(), "base: 0; fiber: v1_1");
        let chart = string_chart();
        let l = chart.parse("(sigma*v1_1^2 - tau*v1_2^2)/2").unwrap();
        assert_eq!(c.apply(&l).equal(&(Expr::int(2) * &l)), Equality::Symbolic);
    }

    #[test]
    fn j_examples() {
        let chart = string_chart();
        assert_eq!(apply_j(0, &VectorField::dq(&chart, 0)), VectorField::dv(&chart, 0, 0));
        assert!(apply_j(1, &VectorField::dv(&chart, 0, 0)).is_zero());
    }

    #[test]
    fn bracket_examples() {
        let chart = string_chart();
        let x = VectorField::new(&chart, vec![chart.parse("q1*v1_1").unwrap()], vec![vec![chart.parse("v1_2").unwrap(), Expr::zero()]]).unwrap();
        assert!(lie_bracket(&x, &x).is_zero());
        let y = VectorField::dq(&chart, 0);
        let b = lie_bracket(&y, &x);
        assert_eq!(b.base[0], chart.parse("v1_1").unwrap());
    }

    #[test]
    fn lift_examples() {
        let chart = string_chart();
        let dq = VectorField::dq(&chart, 0);
        assert_eq!(complete_lift(&dq).unwrap(), dq);
        let z = VectorField::from_base(&chart, vec![Expr::q(0)]).unwrap();
        let zc = complete_lift(&z).unwrap();
        assert_eq!(zc.to_string(), "base: q1; fiber: v1_1, v1_2");
        assert!(complete_lift(&VectorField::zero(&chart)).unwrap().is_zero());
        assert_eq!(vertical_lift(&dq, 0).unwrap(), VectorField::dv(&chart, 0, 0));
        let l = chart.parse("(sigma*v1_1^2 - tau*v1_2^2)/2").unwrap();
        assert_eq!(vertical_lift(&dq, 0).unwrap().apply(&l), chart.parse("sigma*v1_1").unwrap());
        let bad = VectorField::from_base(&chart, vec![Expr::v(0, 0)]).unwrap();
        assert!(matches!(complete_lift(&bad), Err(GeometryError::NotBasic(_))));
        assert!(matches!(complete_lift(&VectorField::dv(&chart, 0, 1)), Err(GeometryError::NotBasic(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn lifts_are_lie_algebra_morphisms((chart, x, y) in arb_basic_pair()) {
            let xy = lie_bracket(&x, &y);
            let (xc, yc) = (complete_lift(&x).unwrap(), complete_lift(&y).unwrap());
            prop_assert_eq!(lie_bracket(&xc, &yc).equal(&complete_lift(&xy).unwrap()), Equality::Symbolic);
            for alpha in 0..chart.k() {
                let yv = vertical_lift(&y, alpha).unwrap();
                prop_assert_eq!(lie_bracket(&xc, &yv).equal(&vertical_lift(&xy, alpha).unwrap()), Equality::Symbolic);
                let xv = vertical_lift(&x, alpha).unwrap();
                for beta in 0..chart.k() {
                    let yvb = vertical_lift(&y, beta).unwrap();
                    prop_assert!(lie_bracket(&xv, &yvb).is_zero());
                }
            }
        }

        #[test]
        fn j_squares_to_zero((chart, x) in (1usize..4, 1usize..4).prop_flat_map(|(k, n)| arb_field(k, n, 2))) {
            for alpha in 0..chart.k() {
                for beta in 0..chart.k() {
                    prop_assert!(apply_j(alpha, &apply_j(beta, &x)).is_zero());
                }
            }
        }

        #[test]
        fn jacobi_identity(
            (x, y, z) in (1usize..3, 1usize..3).prop_flat_map(|(k, n)| (arb_field(k, n, 1), arb_field(k, n, 1), arb_field(k, n, 1)))
        ) {
            let (x, y, z) = (x.1, y.1, z.1);
            let s = lie_bracket(&x, &lie_bracket(&y, &z))
                .add(&lie_bracket(&y, &lie_bracket(&z, &x)))
                .add(&lie_bracket(&z, &lie_bracket(&x, &y)));
            prop_assert_eq!(s.zero_grade(), Equality::Symbolic);
        }
    }

    fn arb_basic_pair() -> impl Strategy<Value = (Chart, VectorField, VectorField)> {
        (1usize..4, 1usize..4)
            .prop_flat_map(|(k, n)| (arb_basic_field(k, n, 2), arb_basic_field(k, n, 2)))
            .prop_map(|((c, x), (_, y))| (c, x, y))
    }
}
