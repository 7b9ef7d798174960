use super::{canon, Expr, Func, Node, Symbol};

impl Expr {
    /// Exact partial derivative with respect to `s`, in canonical form.
    ///
    /// Any symbol may be used as the variable; all others are constants.
    pub fn diff(&self, s: &Symbol) -> Expr {
        derive(&self.canon(), s)
    }

    /// Derivative along a derivation given by its components:
    /// `sum_s comps(s) * d/ds`.
    pub fn derive_along(&self, comps: &[(Symbol, Expr)]) -> Expr {
        let e = self.canon();
        Expr::sum(comps.iter().filter(|(_, c)| !c.is_zero()).map(|(s, c)| c * derive(&e, s)))
    }
}

fn derive(e: &Expr, s: &Symbol) -> Expr {
    if !e.depends_on(s) {
        return Expr::zero();
    }
    match e.node() {
        Node::Num(_) => Expr::zero(),
        Node::Sym(t) => {
            if t == s {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Func(f, u) => {
            let du = derive(u, s);
            let outer = match f {
                Func::Sqrt => canon::mul_all([
                    Expr::rational(1, 2),
                    canon::pow(e.clone(), -1).expect("sqrt node is not a number"),
                ]),
                Func::Sin => u.cos(),
                Func::Cos => -u.sin(),
                Func::Exp => e.clone(),
                Func::Log => canon::pow(u.clone(), -1).expect("log argument is not zero"),
            };
            canon::mul_all([outer, du])
        }
        Node::Pow(b, n) => {
            let db = derive(b, s);
            let lower = canon::pow(b.clone(), n - 1).expect("power base is not a number");
            canon::mul_all([Expr::int(*n), lower, db])
        }
        Node::Mul(fs) => canon::add_all((0..fs.len()).filter(|&i| fs[i].depends_on(s)).map(|i| {
            let mut parts: Vec<Expr> = Vec::with_capacity(fs.len());
            for (j, f) in fs.iter().enumerate() {
                parts.push(if j == i { derive(f, s) } else { f.clone() });
            }
            canon::mul_all(parts)
        })),
        Node::Add(ts) => canon::add_all(ts.iter().map(|t| derive(t, s))),
        Node::Neg(_) | Node::Div(..) => derive(&e.canon(), s),
    }
}
