mod common;

use common::*;
use lambda_quad::expr::{parse, Expr, Var};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn render_then_parse_preserves_values(e in smooth_expr(), p in jet_point()) {
        let text = e.to_string();
        let back = parse(&text).unwrap_or_else(|err| panic!("`{text}`: {err}"));
        prop_assert!(close(eval(&e, p), eval(&back, p), 1e-12), "`{}`", text);
    }

    #[test]
    fn rendering_is_a_fixed_point(e in smooth_expr()) {
        let once = parse(&e.to_string()).unwrap().to_string();
        let twice = parse(&once).unwrap().to_string();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn derivative_matches_central_difference(e in smooth_expr(), p in jet_point()) {
        for v in Var::JET {
            let exact = eval(&e.diff(v), p);
            let fd = central_difference(&e, v, p, 1e-5);
            prop_assert!(close(exact, fd, 1e-5), "d/d{} of `{}`: {} vs {}", v, e, exact, fd);
        }
    }

    #[test]
    fn derivative_is_linear(a in smooth_expr(), b in smooth_expr(), k in -3i64..=3, p in jet_point()) {
        let lhs = (&a * k + &b).diff(Var::U);
        let rhs = a.diff(Var::U) * k + b.diff(Var::U);
        prop_assert!(close(eval(&lhs, p), eval(&rhs, p), 1e-10));
    }

    #[test]
    fn derivative_obeys_leibniz(a in smooth_expr(), b in smooth_expr(), p in jet_point()) {
        let lhs = (&a * &b).diff(Var::Ux);
        let rhs = a.diff(Var::Ux) * &b + &a * b.diff(Var::Ux);
        prop_assert!(close(eval(&lhs, p), eval(&rhs, p), 1e-10));
    }

    #[test]
    fn mixed_partials_commute(e in smooth_expr(), p in jet_point()) {
        let xu = e.diff(Var::X).diff(Var::U);
        let ux = e.diff(Var::U).diff(Var::X);
        prop_assert!(close(eval(&xu, p), eval(&ux, p), 1e-9));
    }

    #[test]
    fn difference_with_itself_is_exact_zero(e in smooth_expr()) {
        prop_assert!((&e - &e).is_zero());
    }

    #[test]
    fn substitution_agrees_with_evaluation(e in smooth_expr(), by in smooth_expr(), p in jet_point()) {
        let substituted = e.subst(Var::U, &by);
        let mut env = env(p);
        env.set(Var::U, eval(&by, p));
        prop_assert!(close(eval(&substituted, p), e.eval(&env).unwrap(), 1e-12));
    }
}

#[test]
fn parse_rejects_malformed_input() {
    for bad in ["", "u +", "sin(", "(u", "u ** 2", "foo(u)", "2 3"] {
        assert!(parse(bad).is_err(), "`{bad}` parsed");
    }
}

#[test]
fn constant_folding_is_exact() {
    let e = parse("1/3 + 1/6").unwrap();
    assert_eq!(e.to_string(), "1/2");
    assert!(parse("x*0").unwrap().is_zero());
    assert_eq!(Expr::rational(2, 4).to_string(), "1/2");
}
