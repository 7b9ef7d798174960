use proptest::prelude::*;

use crate::expr::{Expr, Symbol};
use crate::geometry::{Chart, VectorField};

pub fn chart(k: usize, n: usize) -> Chart {
    Chart::new(k, n, &[] as &[&str]).unwrap()
}

pub fn base_symbols(n: usize) -> Vec<Symbol> {
    (0..n).map(Symbol::Base).collect()
}

pub fn all_symbols(k: usize, n: usize) -> Vec<Symbol> {
    chart(k, n).coordinates()
}

/// Polynomials with small integer coefficients and total degree <= `degree`.
pub fn arb_poly(symbols: Vec<Symbol>, degree: usize) -> impl Strategy<Value = Expr> {
    let term = (-3i64..=3, prop::collection::vec(prop::sample::select(symbols), 0..=degree));
    prop::collection::vec(term, 0..4).prop_map(|terms| {
        Expr::sum(terms.into_iter().map(|(c, xs)| Expr::int(c) * Expr::product(xs.into_iter().map(Expr::sym))))
    })
}

pub fn arb_field(k: usize, n: usize, degree: usize) -> impl Strategy<Value = (Chart, VectorField)> {
    let syms = all_symbols(k, n);
    (
        prop::collection::vec(arb_poly(syms.clone(), degree), n),
        prop::collection::vec(prop::collection::vec(arb_poly(syms, degree), k), n),
    )
        .prop_map(move |(base, fiber)| {
            let c = chart(k, n);
            let x = VectorField::new(&c, base, fiber).unwrap();
            (c, x)
        })
}

pub fn arb_basic_field(k: usize, n: usize, degree: usize) -> impl Strategy<Value = (Chart, VectorField)> {
    prop::collection::vec(arb_poly(base_symbols(n), degree), n).prop_map(move |base| {
        let c = chart(k, n);
        let x = VectorField::from_base(&c, base).unwrap();
        (c, x)
    })
}
