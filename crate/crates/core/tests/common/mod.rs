#![allow(dead_code)]

use lambda_quad::expr::{Env, Expr, Var};
use proptest::prelude::*;

/// Smooth expressions in `x, u, ux`, built so that every node is defined on
/// all of R^3 (denominators and logarithm arguments are kept positive).
pub fn smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::x()),
        Just(Expr::u()),
        Just(Expr::ux()),
        (-4i64..=4).prop_map(Expr::int),
        (1i64..=5, 2i64..=5).prop_map(|(n, d)| Expr::rational(n, d)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a / (b.powi(2) + 2)),
            inner.clone().prop_map(|a| a.sin()),
            inner.clone().prop_map(|a| a.cos()),
            inner.clone().prop_map(|a| a.sin().exp()),
            inner.clone().prop_map(|a| (a.powi(2) + 1).sqrt()),
            inner.clone().prop_map(|a| (a.powi(2) + 2).ln()),
            inner.clone().prop_map(|a| a.arctan()),
            (inner, 2i64..=3).prop_map(|(a, n)| a.powi(n)),
        ]
    })
}

pub fn jet_point() -> impl Strategy<Value = (f64, f64, f64)> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
}

pub fn env((x, u, ux): (f64, f64, f64)) -> Env {
    Env::jet(x, u, ux)
}

pub fn eval(e: &Expr, p: (f64, f64, f64)) -> f64 {
    e.eval(&env(p))
        .expect("smooth expressions evaluate everywhere")
}

/// Central difference of `e` in `v` at `p`.
pub fn central_difference(e: &Expr, v: Var, p: (f64, f64, f64), h: f64) -> f64 {
    let shift = |d: f64| {
        let mut q = env(p);
        q.set(v, q.get(v).unwrap() + d);
        e.eval(&q).unwrap()
    };
    (shift(h) - shift(-h)) / (2.0 * h)
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}
