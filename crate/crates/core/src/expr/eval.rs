use thiserror::Error;

use super::{Expr, Func, Node, Var};
use crate::sample::Point;

/// Variable bindings for evaluation. Unbound variables are an error.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Env {
    values: [Option<f64>; 7],
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn jet(x: f64, u: f64, ux: f64) -> Env {
        Env::new().with(Var::X, x).with(Var::U, u).with(Var::Ux, ux)
    }

    pub fn with(mut self, v: Var, value: f64) -> Env {
        self.values[v.index()] = Some(value);
        self
    }

    pub fn set(&mut self, v: Var, value: f64) {
        self.values[v.index()] = Some(value);
    }

    pub fn get(&self, v: Var) -> Option<f64> {
        self.values[v.index()]
    }
}

impl From<Point> for Env {
    fn from(p: Point) -> Env {
        Env::jet(p.x, p.u, p.ux)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    DivisionByZero,
    LogOfNonPositive,
    ArctanhOutOfRange,
    SqrtOfNegative,
    InvalidPower,
    BasisOutOfRange,
    NonFinite,
}

impl std::fmt::Display for DomainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::LogOfNonPositive => "logarithm of a non-positive number",
            DomainKind::ArctanhOutOfRange => "arctanh argument outside (-1, 1)",
            DomainKind::SqrtOfNegative => "square root of a negative number",
            DomainKind::InvalidPower => "power without a real value",
            DomainKind::BasisOutOfRange => "basis function evaluated outside its span",
            DomainKind::NonFinite => "non-finite value",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("variable `{0}` is not bound")]
    Unbound(Var),
    #[error("{kind} in `{subtree}`")]
    Domain { kind: DomainKind, subtree: String },
}

pub fn eval_at(e: &Expr, p: Point) -> Result<f64, EvalError> {
    eval(e, &Env::from(p))
}

fn domain(kind: DomainKind, e: &Expr) -> EvalError {
    EvalError::Domain {
        kind,
        subtree: e.to_string(),
    }
}

fn finite(v: f64, e: &Expr) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(domain(DomainKind::NonFinite, e))
    }
}

pub(super) fn eval(e: &Expr, env: &Env) -> Result<f64, EvalError> {
    match e.node() {
        Node::Num(n) => Ok(n.to_f64()),
        Node::Var(v) => env.get(*v).ok_or(EvalError::Unbound(*v)),
        Node::Sum(ts) => {
            let mut acc = 0.0;
            for t in ts {
                acc += eval(t, env)?;
            }
            finite(acc, e)
        }
        Node::Product(fs) => {
            let mut acc = 1.0;
            for f in fs {
                acc *= eval(f, env)?;
            }
            finite(acc, e)
        }
        Node::Quotient(a, b) => {
            let den = eval(b, env)?;
            if den == 0.0 {
                return Err(domain(DomainKind::DivisionByZero, e));
            }
            let v = eval(a, env)? / den;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(domain(DomainKind::DivisionByZero, e))
            }
        }
        Node::Power(b, x) => {
            let base = eval(b, env)?;
            let v = match x.as_number().and_then(|n| n.as_integer()) {
                Some(k) => {
                    if base == 0.0 && k < 0 {
                        return Err(domain(DomainKind::DivisionByZero, e));
                    }
                    match i32::try_from(k) {
                        Ok(k) => base.powi(k),
                        Err(_) => base.powf(k as f64),
                    }
                }
                None => {
                    let ex = eval(x, env)?;
                    if base < 0.0 && ex.fract() != 0.0 {
                        return Err(domain(DomainKind::InvalidPower, e));
                    }
                    base.powf(ex)
                }
            };
            finite(v, e)
        }
        Node::Neg(a) => Ok(-eval(a, env)?),
        Node::Call(f, a) => {
            let v = eval(a, env)?;
            let bad = match f {
                Func::Ln if v <= 0.0 => Some(DomainKind::LogOfNonPositive),
                Func::Sqrt if v < 0.0 => Some(DomainKind::SqrtOfNegative),
                Func::Arctanh if v.abs() >= 1.0 => Some(DomainKind::ArctanhOutOfRange),
                _ => None,
            };
            if let Some(kind) = bad {
                return Err(domain(kind, e));
            }
            finite(f.apply(v), e)
        }
        Node::Basis(b) => {
            let x = env.get(Var::X).ok_or(EvalError::Unbound(Var::X))?;
            b.basis
                .eval(b.index, b.derivative, x)
                .ok_or_else(|| domain(DomainKind::BasisOutOfRange, e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn lambda_value() {
        let e = parse("ux/u - u + 1/u").unwrap();
        assert_eq!(eval_at(&e, Point::new(0.0, 2.0, 1.0)).unwrap(), -1.0);
    }

    #[test]
    fn painleve_rhs_value() {
        let e = parse("ux^2/(2*u) - 2*u*ux - u^3/2 - 1/(2*u)").unwrap();
        assert_eq!(eval_at(&e, Point::new(0.0, 1.0, 0.0)).unwrap(), -1.0);
    }

    #[test]
    fn domain_errors_name_the_subtree() {
        let e = parse("x + arctanh(u)").unwrap();
        match eval_at(&e, Point::new(0.0, 1.0, 0.0)) {
            Err(EvalError::Domain { kind, subtree }) => {
                assert_eq!(kind, DomainKind::ArctanhOutOfRange);
                assert_eq!(subtree, "arctanh(u)");
            }
            other => panic!("unexpected {other:?}"),
        }
        let e = parse("1/u").unwrap();
        assert!(matches!(
            eval_at(&e, Point::new(0.0, 0.0, 0.0)),
            Err(EvalError::Domain {
                kind: DomainKind::DivisionByZero,
                ..
            })
        ));
        let e = parse("ln(u - 1)").unwrap();
        assert!(eval_at(&e, Point::new(0.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn unbound_variables() {
        let e = parse("C*u").unwrap();
        assert_eq!(
            eval_at(&e, Point::new(0.0, 1.0, 0.0)),
            Err(EvalError::Unbound(Var::C))
        );
        let env = Env::jet(0.0, 1.0, 0.0).with(Var::C, 2.0);
        assert_eq!(e.eval(&env).unwrap(), 2.0);
    }

    #[test]
    fn zero_is_zero_everywhere() {
        assert_eq!(
            eval_at(&Expr::zero(), Point::new(5.0, -3.0, 1e3)).unwrap(),
            0.0
        );
    }
}
