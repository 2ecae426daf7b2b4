use std::fmt;

use thiserror::Error;

use crate::expr::{Env, Expr, Var};
use crate::numverify::{integrate_ode2, IntegrateError, Trajectory, MIN_TOL};
use crate::sample::Interval;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("coefficient q(x) is not evaluable at x = {0}")]
    Coefficient(f64),
    #[error("base point {x0} lies outside the span [{lo}, {hi}]")]
    BasePoint { x0: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Integration(#[from] IntegrateError),
}

/// Fundamental pair of `psi'' = q(x) psi` with `(psi1, psi1') = (1, 0)` and
/// `(psi2, psi2') = (0, 1)` at `x0`, so the Wronskian is 1.
pub struct LinearBasis {
    name: String,
    q: Expr,
    x0: f64,
    span: Interval,
    /// Per solution: (backward from x0, forward from x0).
    parts: [(Option<Trajectory>, Option<Trajectory>); 2],
}

impl fmt::Debug for LinearBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearBasis")
            .field("name", &self.name)
            .field("q", &self.q)
            .field("x0", &self.x0)
            .field("span", &self.span)
            .finish()
    }
}

pub fn make_linear_basis(
    name: &str,
    q: &Expr,
    x0: f64,
    span: Interval,
) -> Result<LinearBasis, BasisError> {
    if !span.contains(x0) {
        return Err(BasisError::BasePoint {
            x0,
            lo: span.lo,
            hi: span.hi,
        });
    }
    for k in 0..=16 {
        let x = span.at(k as f64 / 16.0);
        if q.eval(&Env::new().with(Var::X, x)).is_err() {
            return Err(BasisError::Coefficient(x));
        }
    }
    let phi = q.clone() * Expr::u();
    let solve =
        |u0: f64, ux0: f64| -> Result<(Option<Trajectory>, Option<Trajectory>), BasisError> {
            let back = if span.lo < x0 {
                Some(integrate_ode2(&phi, x0, u0, ux0, span.lo, MIN_TOL)?)
            } else {
                None
            };
            let fwd = if span.hi > x0 {
                Some(integrate_ode2(&phi, x0, u0, ux0, span.hi, MIN_TOL)?)
            } else {
                None
            };
            Ok((back, fwd))
        };
    Ok(LinearBasis {
        name: name.to_string(),
        q: q.clone(),
        x0,
        span,
        parts: [solve(1.0, 0.0)?, solve(0.0, 1.0)?],
    })
}

impl LinearBasis {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn q(&self) -> &Expr {
        &self.q
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn span(&self) -> Interval {
        self.span
    }

    /// `psi_{index+1}(x)` or its derivative; `None` outside the span.
    pub fn eval(&self, index: usize, derivative: bool, x: f64) -> Option<f64> {
        let (back, fwd) = &self.parts[index];
        let part = if x < self.x0 { back } else { fwd };
        let comp = usize::from(derivative);
        match part {
            Some(t) => t.state_at(x).map(|s| s[comp]),
            None if x == self.x0 => Some(match (index, derivative) {
                (0, false) | (1, true) => 1.0,
                _ => 0.0,
            }),
            None => None,
        }
    }

    pub fn wronskian(&self, x: f64) -> Option<f64> {
        Some(
            self.eval(0, false, x)? * self.eval(1, true, x)?
                - self.eval(0, true, x)? * self.eval(1, false, x)?,
        )
    }

    /// Largest `|W(x) - 1|` over a uniform grid of the span.
    pub fn wronskian_deviation(&self, grid: usize) -> f64 {
        (0..=grid)
            .filter_map(|k| self.wronskian(self.span.at(k as f64 / grid as f64)))
            .map(|w| (w - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn free_linear_equation() {
        let b = make_linear_basis("psi", &Expr::zero(), 0.25, Interval::new(0.0, 1.0)).unwrap();
        for x in [0.0, 0.25, 0.6, 1.0] {
            assert!((b.eval(0, false, x).unwrap() - 1.0).abs() < 1e-12);
            assert!((b.eval(1, false, x).unwrap() - (x - 0.25)).abs() < 1e-12);
        }
        assert!(b.wronskian_deviation(20) < 1e-12);
        assert!(b.eval(0, false, 1.5).is_none());
    }

    #[test]
    fn half_coefficient_has_hyperbolic_solutions() {
        let q = parse("1/2").unwrap();
        let b = make_linear_basis("psi", &q, 0.0, Interval::new(0.0, 1.0)).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((b.eval(0, false, 1.0).unwrap() - r.cosh()).abs() < 1e-8);
        let s2 = std::f64::consts::SQRT_2;
        assert!((b.eval(1, false, 1.0).unwrap() - s2 * r.sinh()).abs() < 1e-8);
    }

    #[test]
    fn airy_shifted_wronskian_is_constant() {
        let q = parse("1 + x").unwrap();
        let b = make_linear_basis("psi", &q, 0.0, Interval::new(-1.0, 1.0)).unwrap();
        assert!(b.wronskian_deviation(50) < 1e-8);
    }

    #[test]
    fn rejects_bad_inputs() {
        let q = parse("1/x").unwrap();
        assert!(matches!(
            make_linear_basis("psi", &q, 0.5, Interval::new(0.0, 1.0)),
            Err(BasisError::Coefficient(_))
        ));
        assert!(matches!(
            make_linear_basis("psi", &Expr::zero(), 2.0, Interval::new(0.0, 1.0)),
            Err(BasisError::BasePoint { .. })
        ));
    }
}
