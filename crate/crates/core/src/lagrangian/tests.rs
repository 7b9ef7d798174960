use super::*;
use crate::geometry::apply_j;
use crate::testutil::{all_symbols, arb_poly, chart};
use proptest::prelude::*;

fn lag(k: usize, n: usize, params: &[&str], text: &str) -> Lagrangian {
    let c = Chart::new(k, n, params).unwrap();
    let l = c.parse(text).unwrap();
    Lagrangian::new(c, l).unwrap()
}

fn string() -> Lagrangian {
    lag(2, 1, &["sigma", "tau"], "(sigma*v1_1^2 - tau*v1_2^2)/2")
}

fn navier() -> Lagrangian {
    lag(2, 2, &["lambda", "nu"], "(lambda/2 + nu)*(v1_1^2 + v2_2^2) + nu/2*(v1_2^2 + v2_1^2) + (lambda + nu)*v1_1*v2_2")
}

fn minimal() -> Lagrangian {
    lag(2, 1, &[], "sqrt(1 + v1_1^2 + v1_2^2)")
}

fn e(l: &Lagrangian, s: &str) -> Expr {
    l.chart().parse(s).unwrap()
}

#[test]
fn foreign_symbols_are_rejected() {
    let c = Chart::new(1, 1, &[] as &[&str]).unwrap();
    assert!(Lagrangian::new(c.clone(), Expr::param("m")).is_err());
    assert!(Lagrangian::new(c, Expr::v(0, 1)).is_err());
}

#[test]
fn string_energy_equals_lagrangian() {
    let l = string();
    let el = energy(&l);
    assert_eq!(el.equal(l.expr()), Equality::Symbolic);
    let de = OneForm::exact(l.chart(), &el);
    assert!(de.dq[0].is_zero());
    assert_eq!(de.dv[0][0], e(&l, "sigma*v1_1"));
    assert_eq!(de.dv[0][1], e(&l, "-tau*v1_2"));
}

#[test]
fn constant_lagrangian_energy() {
    let l = lag(2, 1, &["m"], "m");
    assert_eq!(energy(&l), e(&l, "-m"));
}

#[test]
fn wave_energy_equals_lagrangian() {
    let l = lag(3, 1, &["c"], "(v1_1^2 - c*v1_2^2 - c*v1_3^2)/2");
    assert_eq!(energy(&l).equal(l.expr()), Equality::Symbolic);
    let h = hessian(&l);
    assert_eq!(h.get(0, 0, 0, 0), &Expr::one());
    assert_eq!(h.get(1, 0, 1, 0), &e(&l, "-c"));
    assert_eq!(h.get(2, 0, 2, 0), &e(&l, "-c"));
    assert!(h.get(0, 0, 1, 0).is_zero());
}

#[test]
fn string_one_forms() {
    let l = string();
    let th = cartan_one_forms(&l);
    assert_eq!(th[0].coeffs, vec![e(&l, "sigma*v1_1")]);
    assert_eq!(th[1].coeffs, vec![e(&l, "-tau*v1_2")]);
    let q_only = lag(2, 1, &[], "q1^3");
    assert!(cartan_one_forms(&q_only).iter().all(|t| t.coeffs.iter().all(Expr::is_zero)));
}

#[test]
fn minimal_surface_one_form() {
    let l = minimal();
    let th = cartan_one_forms(&l);
    assert_eq!(th[0].coeffs[0], e(&l, "v1_1/sqrt(1 + v1_1^2 + v1_2^2)"));
}

#[test]
fn string_two_forms() {
    let l = string();
    let om = cartan_two_forms(&l);
    assert_eq!(om[0].to_string(), "(sigma) dq1^dv1_1");
    assert_eq!(om[1].to_string(), "(-tau) dq1^dv1_2");
    assert!(om[0].a[0][0].is_zero());
}

#[test]
fn velocity_only_lagrangian_has_no_qq_block() {
    let l = navier();
    for om in cartan_two_forms(&l) {
        assert!(om.a.iter().flatten().all(Expr::is_zero));
    }
}

#[test]
fn navier_blocks_are_constant() {
    let l = navier();
    let h = hessian(&l);
    assert_eq!(h.get(0, 0, 0, 0), &e(&l, "lambda + 2*nu"));
    assert!(h.matrix.iter().flatten().all(|x| !x.any_symbol(&|s| s.is_coordinate())));
    let om = cartan_two_forms(&l);
    assert_eq!(om[0].g[0][0][0], e(&l, "lambda + 2*nu"));
}

#[test]
fn hessian_examples() {
    let h = hessian(&string());
    let l = string();
    assert_eq!(h.matrix, vec![vec![e(&l, "sigma"), Expr::zero()], vec![Expr::zero(), e(&l, "-tau")]]);
    let lin = lag(2, 2, &[], "q1*v1_1 + v2_2*q2^2");
    assert!(hessian(&lin).matrix.iter().flatten().all(Expr::is_zero));
}

#[test]
fn determinant_matches_float_elimination() {
    let c = chart(1, 1);
    let m: Vec<Vec<Expr>> = vec![
        vec![c.parse("2").unwrap(), c.parse("q1").unwrap(), c.parse("1").unwrap()],
        vec![c.parse("0").unwrap(), c.parse("3").unwrap(), c.parse("v1_1").unwrap()],
        vec![c.parse("q1").unwrap(), c.parse("1").unwrap(), c.parse("4").unwrap()],
    ];
    let d = determinant(&m);
    let p = Assignment::new().with(Symbol::Base(0), 0.3).with(Symbol::Velocity { i: 0, alpha: 0 }, 0.7);
    let mf: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|x| x.eval(&p).unwrap()).collect()).collect();
    assert!((d.eval(&p).unwrap() - determinant_f64(mf)).abs() < 1e-12);
}

#[test]
fn regularity_verdicts() {
    let r = is_regular(&string());
    assert_eq!((r.verdict, r.grade), (RegularityVerdict::Regular, Grade::Symbolic));
    assert_eq!(r.assumption.as_deref(), Some("-sigma*tau != 0"));
    let r = is_regular(&lag(3, 1, &[], "(v1_1^2 + v1_2^2 + v1_3^2)/2"));
    assert_eq!((r.verdict, r.grade), (RegularityVerdict::Regular, Grade::Symbolic));
    let r = is_regular(&minimal());
    assert_eq!((r.verdict, r.grade), (RegularityVerdict::Regular, Grade::Numeric));
    let r = is_regular(&lag(2, 1, &[], "(v1_1 + v1_2)^2"));
    assert_eq!((r.verdict, r.grade), (RegularityVerdict::Singular, Grade::Symbolic));
    let r = is_regular(&lag(1, 1, &[], "v1_1^3"));
    assert_eq!(r.verdict, RegularityVerdict::Regular);
    assert_eq!(r.grade, Grade::Numeric);
    let r = is_regular(&lag(1, 1, &[], "(v1_1 - 1/2)^3"));
    assert_eq!(r.verdict, RegularityVerdict::Regular, "sampled away from the zero set");
}

#[test]
fn interior_product_of_string_forms() {
    let l = string();
    let c = l.chart();
    let om = cartan_two_forms(&l);
    let x = VectorField::new(c, vec![e(&l, "q1")], vec![vec![e(&l, "v1_1"), e(&l, "v1_2")]]).unwrap();
    let ix = om[0].interior(&x);
    assert_eq!(ix.dq[0], e(&l, "-sigma*v1_1"));
    assert_eq!(ix.dv[0][0], e(&l, "sigma*q1"));
    assert!(ix.dv[0][1].is_zero());
}

#[test]
fn closedness_detects_non_closed_forms() {
    let c = chart(2, 1);
    assert_eq!(OneForm::exact(&c, &c.parse("q1^2*v1_2 + sin(v1_1)").unwrap()).closedness().0, Equality::Symbolic);
    let mut f = OneForm::zero(&c);
    f.dv[0][1] = c.parse("v1_1").unwrap();
    let (g, w) = f.closedness();
    assert_eq!(g, Equality::Unequal);
    let (a, b, d) = w.unwrap();
    assert_eq!((a, b), (Symbol::Velocity { i: 0, alpha: 0 }, Symbol::Velocity { i: 0, alpha: 1 }));
    assert_eq!(d, Expr::one());
}

fn arb_lagrangian() -> impl Strategy<Value = Lagrangian> {
    (1usize..3, 1usize..3).prop_flat_map(|(k, n)| {
        arb_poly(all_symbols(k, n), 3).prop_map(move |l| Lagrangian::new(chart(k, n), l).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn theta_is_dl_composed_with_j(l in arb_lagrangian()) {
        let c = l.chart().clone();
        let dl = OneForm::exact(&c, l.expr());
        for th in cartan_one_forms(&l) {
            for i in 0..c.n() {
                let val = dl.contract(&apply_j(th.alpha, &VectorField::dq(&c, i)));
                prop_assert_eq!(val.equal(&th.coeffs[i]), Equality::Symbolic);
            }
        }
    }

    #[test]
    fn two_form_block_symmetries(l in arb_lagrangian()) {
        let c = l.chart().clone();
        let om = cartan_two_forms(&l);
        for w in &om {
            for i in 0..c.n() {
                for j in 0..c.n() {
                    prop_assert!((&w.a[i][j] + &w.a[j][i]).is_zero());
                }
            }
        }
        for alpha in 0..c.k() {
            for beta in 0..c.k() {
                for i in 0..c.n() {
                    for j in 0..c.n() {
                        prop_assert_eq!(&om[alpha].g[i][j][beta], &om[beta].g[j][i][alpha]);
                    }
                }
            }
        }
    }

    #[test]
    fn omega_is_minus_d_theta(l in arb_lagrangian()) {
        // i_X i_Y omega = -(X(theta(Y)) - Y(theta(X)) - theta([X,Y])) on coordinate fields.
        let c = l.chart().clone();
        let basis: Vec<VectorField> = (0..c.n()).map(|i| VectorField::dq(&c, i))
            .chain((0..c.n()).flat_map(|i| (0..c.k()).map(move |a| (i, a))).map(|(i, a)| VectorField::dv(&c, i, a)))
            .collect();
        for (th, om) in cartan_one_forms(&l).iter().zip(cartan_two_forms(&l).iter()) {
            for x in &basis {
                for y in &basis {
                    let lhs = om.interior(x).contract(y);
                    let rhs = -(x.apply(&th.contract(y)) - y.apply(&th.contract(x)));
                    prop_assert_eq!(lhs.equal(&rhs), Equality::Symbolic);
                }
            }
        }
    }
}
