use super::{Expr, Func, Node, Var};

pub(super) fn diff(e: &Expr, v: Var) -> Expr {
    if !e.depends_on(v) {
        return Expr::zero();
    }
    match e.node() {
        Node::Num(_) => Expr::zero(),
        Node::Var(w) => {
            if *w == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Sum(ts) => Expr::sum(ts.iter().map(|t| diff(t, v))),
        Node::Product(fs) => Expr::sum((0..fs.len()).map(|i| {
            let d = diff(&fs[i], v);
            if d.is_zero() {
                return d;
            }
            Expr::product(
                fs.iter()
                    .enumerate()
                    .map(|(j, f)| if i == j { d.clone() } else { f.clone() }),
            )
        })),
        Node::Quotient(a, b) => {
            let da = diff(a, v);
            let db = diff(b, v);
            let first = &da / b;
            if db.is_zero() {
                first
            } else {
                first - a * &db / b.powi(2)
            }
        }
        Node::Power(b, x) => {
            let db = diff(b, v);
            if !x.depends_on(v) {
                // d(b^n) = n b^(n-1) b'
                let n_minus_1 = Expr::sum([x.clone(), Expr::int(-1)]);
                return x * b.pow(&n_minus_1) * db;
            }
            let dx = diff(x, v);
            let log_term = dx * b.ln();
            let base_term = if db.is_zero() {
                Expr::zero()
            } else {
                x * db / b
            };
            e * (log_term + base_term)
        }
        Node::Neg(a) => diff(a, v).neg(),
        Node::Call(f, a) => {
            let da = diff(a, v);
            outer_derivative(*f, a) * da
        }
        Node::Basis(b) => {
            debug_assert_eq!(v, Var::X);
            let mut d = b.clone();
            if b.derivative {
                // psi'' = q(x) psi
                d.derivative = false;
                b.basis.q().clone() * Expr::basis(d)
            } else {
                d.derivative = true;
                Expr::basis(d)
            }
        }
    }
}

fn outer_derivative(f: Func, a: &Expr) -> Expr {
    match f {
        Func::Sqrt => Expr::one() / (Expr::int(2) * a.sqrt()),
        Func::Exp => a.exp(),
        Func::Ln => Expr::one() / a,
        Func::Sin => a.cos(),
        Func::Cos => a.sin().neg(),
        Func::Tan => Expr::one() + a.tan().powi(2),
        Func::Arctan => Expr::one() / (Expr::one() + a.powi(2)),
        Func::Arctanh => Expr::one() / (Expr::one() - a.powi(2)),
        Func::Sinh => Expr::call(Func::Cosh, a.clone()),
        Func::Cosh => Expr::call(Func::Sinh, a.clone()),
        Func::Tanh => Expr::one() - a.tanh().powi(2),
        Func::Abs => a / Expr::call(Func::Abs, a.clone()),
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Env, Expr, Var};

    #[test]
    fn polynomial() {
        let e = parse("u^2").unwrap();
        assert_eq!(e.diff(Var::U).to_string(), "2*u");
    }

    #[test]
    fn lambda_ux_derivative() {
        let e = parse("ux/u - u + 1/u").unwrap();
        assert_eq!(e.diff(Var::Ux), parse("1/u").unwrap());
    }

    #[test]
    fn constants_vanish() {
        for t in ["3", "pi", "sqrt(2)", "C1"] {
            assert!(parse(t).unwrap().diff(Var::X).is_zero());
        }
    }

    #[test]
    fn chain_rule_values() {
        let env = Env::jet(0.3, 0.7, -0.4);
        let cases = [
            ("arctanh(u/2)", Var::U, 0.5 / (1.0 - 0.35f64.powi(2))),
            ("sin(x*u)", Var::X, 0.7 * (0.21f64).cos()),
            ("sqrt(u^2 + ux^2)", Var::Ux, -0.4 / (0.65f64).sqrt()),
            ("x^u", Var::U, 0.3f64.powf(0.7) * 0.3f64.ln()),
            ("abs(ux)", Var::Ux, -1.0),
        ];
        for (text, v, expected) in cases {
            let got = parse(text).unwrap().diff(v).eval(&env).unwrap();
            assert!(
                (got - expected).abs() < 1e-14,
                "{text}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn quotient_with_constant_denominator_stays_small() {
        let e = parse("(u^2 + ux)/2").unwrap().diff(Var::U);
        assert_eq!(e, Expr::u());
    }
}
