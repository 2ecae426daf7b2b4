//! Vector fields on first-order jet space `(x, u, ux)`.

use serde::Serialize;

use crate::expr::{Expr, Var};
use crate::sample::{zero_test_at, SampleBox, SampleError, ZeroTest};

/// `cx ∂x + cu ∂u + cux ∂ux`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JetField {
    pub cx: Expr,
    pub cu: Expr,
    pub cux: Expr,
}

impl JetField {
    pub fn new(cx: Expr, cu: Expr, cux: Expr) -> JetField {
        JetField { cx, cu, cux }
    }

    pub fn zero() -> JetField {
        JetField::new(Expr::zero(), Expr::zero(), Expr::zero())
    }

    pub fn components(&self) -> [&Expr; 3] {
        [&self.cx, &self.cu, &self.cux]
    }

    fn map(&self, f: impl Fn(&Expr) -> Expr) -> JetField {
        JetField::new(f(&self.cx), f(&self.cu), f(&self.cux))
    }

    fn zip(&self, other: &JetField, f: impl Fn(&Expr, &Expr) -> Expr) -> JetField {
        JetField::new(
            f(&self.cx, &other.cx),
            f(&self.cu, &other.cu),
            f(&self.cux, &other.cux),
        )
    }

    /// `s · V`.
    pub fn scale(&self, s: &Expr) -> JetField {
        self.map(|c| s * c)
    }

    pub fn add(&self, other: &JetField) -> JetField {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &JetField) -> JetField {
        self.zip(other, |a, b| a - b)
    }

    /// Componentwise sampled zero test; the worst component supplies the witness.
    pub fn is_zero_sampled(
        &self,
        sbox: &SampleBox,
        n: usize,
        tol: f64,
        seed: u64,
    ) -> Result<ZeroTest, SampleError> {
        let points = sbox.points(n, seed)?;
        Ok(ZeroTest::all(
            self.components()
                .into_iter()
                .map(|c| zero_test_at(c, &points, tol, &Var::JET)),
        ))
    }
}

/// A candidate generalized symmetry `(ξ ∂x + η ∂u, λ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaPair {
    pub xi: Expr,
    pub eta: Expr,
    pub lambda: Expr,
}

impl LambdaPair {
    pub fn new(xi: Expr, eta: Expr, lambda: Expr) -> LambdaPair {
        LambdaPair { xi, eta, lambda }
    }

    /// `(∂u, λ)`.
    pub fn canonical(lambda: Expr) -> LambdaPair {
        LambdaPair::new(Expr::zero(), Expr::one(), lambda)
    }

    /// Characteristic `Q = η − ξ·ux`.
    pub fn characteristic(&self) -> Expr {
        &self.eta - &self.xi * Expr::ux()
    }
}

/// `A = ∂x + ux ∂u + φ ∂ux`.
pub fn evolution_field(phi: &Expr) -> JetField {
    JetField::new(Expr::one(), Expr::ux(), phi.clone())
}

/// `V(f) = cx f_x + cu f_u + cux f_ux`.
pub fn apply(v: &JetField, f: &Expr) -> Expr {
    Expr::sum(
        v.components()
            .into_iter()
            .zip(Var::JET)
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, var)| c * f.diff(var)),
    )
}

/// λ-prolongation `ξ∂x + η∂u + ((A+λ)η − (A+λ)ξ · ux)∂ux`.
pub fn lambda_prolong(pair: &LambdaPair, phi: &Expr) -> JetField {
    let a = evolution_field(phi);
    let a_lambda = |f: &Expr| apply(&a, f) + &pair.lambda * f;
    let zeta = a_lambda(&pair.eta) - a_lambda(&pair.xi) * Expr::ux();
    JetField::new(pair.xi.clone(), pair.eta.clone(), zeta)
}

/// `[V, W]_k = V(W_k) − W(V_k)`.
pub fn lie_bracket(v: &JetField, w: &JetField) -> JetField {
    v.zip(w, |vk, wk| apply(v, wk) - apply(w, vk))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::sample::{Interval, DEFAULT_SEED};

    fn pg27_box() -> SampleBox {
        SampleBox::jet(
            Interval::new(0.0, 1.0),
            Interval::new(0.5, 2.0),
            Interval::new(-2.0, 2.0),
        )
        .excluding(Expr::u())
    }

    fn phi0() -> Expr {
        parse("ux^2/(2*u) - 2*u*ux - u^3/2 - 1/(2*u)").unwrap()
    }

    fn assert_zero(e: &Expr) {
        let t = crate::sample::is_zero_sampled(e, &pg27_box(), 100, 1e-10, DEFAULT_SEED).unwrap();
        assert!(t.passed, "{e} not zero: {t:?}");
    }

    fn assert_zero_field(f: &JetField) {
        let t = f
            .is_zero_sampled(&pg27_box(), 100, 1e-10, DEFAULT_SEED)
            .unwrap();
        assert!(t.passed, "{f:?} not zero: {t:?}");
    }

    #[test]
    fn evolution_field_components() {
        let a = evolution_field(&Expr::zero());
        assert_eq!(a, JetField::new(Expr::one(), Expr::ux(), Expr::zero()));
    }

    #[test]
    fn prolongation_of_partial_u() {
        let lambda = parse("ux/u - u + 1/u").unwrap();
        let x1 = lambda_prolong(&LambdaPair::canonical(lambda.clone()), &phi0());
        assert_eq!(x1, JetField::new(Expr::zero(), Expr::one(), lambda));
    }

    #[test]
    fn prolongation_of_the_y_field() {
        let rho1 = parse("-ux/u - u + 1/u").unwrap();
        let y1 = lambda_prolong(
            &LambdaPair::new(Expr::zero(), parse("u^2").unwrap(), rho1),
            &phi0(),
        );
        assert_zero(&(y1.cux - parse("ux*u - u^3 + u").unwrap()));
    }

    #[test]
    fn translation_field() {
        let p = LambdaPair::new(Expr::one(), Expr::zero(), Expr::zero());
        let v = lambda_prolong(&p, &parse("-ux/u - 1/u - u").unwrap());
        assert_eq!(v, JetField::new(Expr::one(), Expr::zero(), Expr::zero()));
    }

    #[test]
    fn apply_examples() {
        let a = evolution_field(&phi0());
        let w2 = parse("(ux + u^2 - 1)/(2*u)").unwrap();
        let rhs = -(w2.powi(2)) - Expr::rational(1, 2);
        assert_zero(&(apply(&a, &w2) - rhs));
        assert!(apply(&a, &Expr::int(5)).is_zero());
        let x2 = JetField::new(Expr::zero(), Expr::one(), parse("ux/u - u - 1/u").unwrap());
        assert_eq!(apply(&x2, &parse("u^2").unwrap()).to_string(), "2*u");
    }

    #[test]
    fn bracket_of_the_x_fields() {
        let l1 = parse("ux/u - u + 1/u").unwrap();
        let l2 = parse("ux/u - u - 1/u").unwrap();
        let x1 = JetField::new(Expr::zero(), Expr::one(), l1);
        let x2 = JetField::new(Expr::zero(), Expr::one(), l2);
        let rho = parse("2/u").unwrap();
        let br = lie_bracket(&x1, &x2);
        assert_zero_field(&br.sub(&x1.sub(&x2).scale(&rho)));
        assert_zero_field(&lie_bracket(&x1, &x1));
    }

    #[test]
    fn y_fields_commute() {
        let y1 = JetField::new(
            Expr::zero(),
            parse("u^2").unwrap(),
            parse("ux*u - u^3 + u").unwrap(),
        );
        let y2 = JetField::new(
            Expr::zero(),
            parse("u^2").unwrap(),
            parse("ux*u - u^3 - u").unwrap(),
        );
        assert_zero_field(&lie_bracket(&y1, &y2));
    }
}
