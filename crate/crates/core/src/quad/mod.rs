//! Exact 1-forms and their potentials by numerical path integration.

mod forms;
mod gk;
mod path;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{Env, EvalError, Expr, Var};
use crate::sample::{Point, SampleBox};

pub use forms::{
    auxiliary_factor, auxiliary_relation_residuals, i_forms, integrating_factors,
    jacobi_last_multiplier, jlm_divergence, reduced_dependence, reduced_factor_residual,
    reduced_integrating_factors, reduced_rhs_at, w_forms, AuxiliaryResiduals,
};
pub use path::plan_path;

/// Default absolute tolerance for the Gauss–Kronrod quadrature.
pub const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("form component not evaluable at ({}, {}, {}): {source}", .point.x, .point.u, .point.ux)]
    Domain { point: Point, source: EvalError },
    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    NotConverged { tol: f64, estimate: f64 },
    #[error("no admissible path from ({}, {}, {}) to ({}, {}, {})", .from.x, .from.u, .from.ux, .to.x, .to.u, .to.ux)]
    NoPath { from: Point, to: Point },
    #[error("endpoint ({}, {}, {}) is not admissible", .0.x, .0.u, .0.ux)]
    Inadmissible(Point),
    #[error("endpoints differ along a coordinate the form has no component for ({0} vs {1})")]
    FiberMismatch(f64, f64),
}

/// `Σ c_v dv` over a subset of the jet coordinates. Coordinates without a
/// component are parameters of the form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneForm {
    pub components: BTreeMap<Var, Expr>,
}

impl OneForm {
    pub fn new(components: impl IntoIterator<Item = (Var, Expr)>) -> OneForm {
        OneForm {
            components: components.into_iter().collect(),
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        self.components.keys().copied().collect()
    }

    pub fn get(&self, v: Var) -> Option<&Expr> {
        self.components.get(&v)
    }

    /// Componentwise `∂/∂v`, e.g. the x-derivative of a fibrewise form.
    pub fn diff(&self, v: Var) -> OneForm {
        OneForm::new(self.components.iter().map(|(k, c)| (*k, c.diff(v))))
    }

    /// `V ⌟ ω` for a field given by its components along `Var::JET`.
    pub fn contract(&self, field: [&Expr; 3]) -> Expr {
        Expr::sum(
            Var::JET
                .iter()
                .zip(field)
                .filter_map(|(v, c)| self.get(*v).map(|w| c * w)),
        )
    }

    fn pullback(
        &self,
        p: &Point,
        q: &Point,
        base: &Env,
    ) -> impl Fn(f64) -> Result<f64, QuadError> + '_ {
        let (p, q, base) = (*p, *q, *base);
        move |t| {
            let mut pt = p;
            let mut env = base;
            for v in Var::JET {
                let (a, b) = (p.get(v).unwrap(), q.get(v).unwrap());
                let val = a + t * (b - a);
                pt.set(v, val);
                env.set(v, val);
            }
            let mut acc = 0.0;
            for (v, c) in &self.components {
                let dv = q.get(*v).unwrap() - p.get(*v).unwrap();
                if dv != 0.0 {
                    let value = c
                        .eval(&env)
                        .map_err(|source| QuadError::Domain { point: pt, source })?;
                    acc += value * dv;
                }
            }
            Ok(acc)
        }
    }
}

/// `∂_b c_a − ∂_a c_b` for each unordered pair of the form's variables.
pub fn closedness_residuals(form: &OneForm) -> Vec<(Var, Var, Expr)> {
    let vars = form.vars();
    let mut out = Vec::new();
    for (i, a) in vars.iter().enumerate() {
        for b in &vars[i + 1..] {
            let r = form.components[a].diff(*b) - form.components[b].diff(*a);
            out.push((*a, *b, r));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineIntegral {
    pub value: f64,
    pub estimated_error: f64,
}

/// `∫ ω` along the polyline through `path`, adaptive GK15 on each segment.
pub fn line_integral(form: &OneForm, path: &[Point], tol: f64) -> Result<LineIntegral, QuadError> {
    line_integral_with(form, path, tol, &Env::new())
}

/// As [`line_integral`], with parameters (such as `C`) bound by `params`.
pub fn line_integral_with(
    form: &OneForm,
    path: &[Point],
    tol: f64,
    params: &Env,
) -> Result<LineIntegral, QuadError> {
    let segments = path.len().saturating_sub(1).max(1);
    let mut out = LineIntegral {
        value: 0.0,
        estimated_error: 0.0,
    };
    for w in path.windows(2) {
        let f = form.pullback(&w[0], &w[1], params);
        let r = gk::integrate(&f, 0.0, 1.0, tol / segments as f64)?;
        out.value += r.value;
        out.estimated_error += r.estimated_error;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub path: Vec<Point>,
    pub estimated_error: f64,
    /// Largest relative closedness residual at the path vertices.
    pub closedness_residual: f64,
}

/// Potential difference `P(target) − P(base)` of a closed form, along an
/// admissible path planned inside `sbox`.
pub fn path_integrate(
    form: &OneForm,
    sbox: &SampleBox,
    base: Point,
    target: Point,
    tol: f64,
) -> Result<QuadratureResult, QuadError> {
    let closedness: Vec<Expr> = closedness_residuals(form)
        .into_iter()
        .map(|(_, _, r)| r)
        .collect();
    path_integrate_prepared(form, &closedness, sbox, base, target, tol)
}

fn path_integrate_prepared(
    form: &OneForm,
    closedness: &[Expr],
    sbox: &SampleBox,
    base: Point,
    target: Point,
    tol: f64,
) -> Result<QuadratureResult, QuadError> {
    let path = plan_path(form, sbox, base, target)?;
    let params = sbox.env_with_fixed();
    let li = line_integral_with(form, &path, tol, &params)?;
    let mut worst: f64 = 0.0;
    for p in &path {
        let mut env = params;
        for v in Var::JET {
            env.set(v, p.get(v).unwrap());
        }
        for r in closedness {
            let terms = r.terms();
            worst = worst.max(crate::sample::relative_residual(r, &terms, &env).relative);
        }
    }
    Ok(QuadratureResult {
        value: li.value,
        path,
        estimated_error: li.estimated_error,
        closedness_residual: worst,
    })
}

/// A potential of a closed form, normalized to vanish at `base`.
///
/// For fibrewise forms (no `x` component) the base is the section
/// `(x, base.u, base.ux)` and `x` is taken from the target.
#[derive(Debug, Clone)]
pub struct Potential {
    pub form: OneForm,
    pub sbox: SampleBox,
    pub base: Point,
    pub tol: f64,
    closedness: Vec<Expr>,
}

impl Potential {
    pub fn new(form: OneForm, sbox: SampleBox, base: Point, tol: f64) -> Potential {
        let closedness = closedness_residuals(&form)
            .into_iter()
            .map(|(_, _, r)| r)
            .collect();
        Potential {
            form,
            sbox,
            base,
            tol,
            closedness,
        }
    }

    fn fibrewise(&self) -> bool {
        self.form.get(Var::X).is_none()
    }

    pub fn base_for(&self, target: &Point) -> Point {
        if self.fibrewise() {
            Point::new(target.x, self.base.u, self.base.ux)
        } else {
            self.base
        }
    }

    pub fn integrate_to(&self, target: Point) -> Result<QuadratureResult, QuadError> {
        let base = self.base_for(&target);
        path_integrate_prepared(
            &self.form,
            &self.closedness,
            &self.sbox,
            base,
            target,
            self.tol,
        )
    }

    pub fn at(&self, target: Point) -> Result<f64, QuadError> {
        Ok(self.integrate_to(target)?.value)
    }

    /// `∂x` of a fibrewise potential: the integral of the x-differentiated
    /// form along the same fibre path.
    pub fn x_derivative(&self, target: Point) -> Result<f64, QuadError> {
        let base = self.base_for(&target);
        let path = plan_path(&self.form, &self.sbox, base, target)?;
        let dx = self.form.diff(Var::X);
        Ok(line_integral_with(&dx, &path, self.tol, &self.sbox.env_with_fixed())?.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::sample::Interval;

    fn fibre_box() -> SampleBox {
        SampleBox::jet(
            Interval::new(0.0, 1.0),
            Interval::new(0.5, 2.0),
            Interval::new(-2.0, 2.0),
        )
        .excluding(Expr::u())
    }

    fn dw2() -> OneForm {
        // w2 = (ux + u^2 - 1)/(2u)
        OneForm::new([
            (Var::U, parse("1/2 - (ux - 1)/(2*u^2)").unwrap()),
            (Var::Ux, parse("1/(2*u)").unwrap()),
        ])
    }

    #[test]
    fn closed_forms_have_zero_residuals() {
        let r = closedness_residuals(&dw2());
        assert_eq!(r.len(), 1);
        let t = crate::sample::is_zero_sampled(&r[0].2, &fibre_box(), 100, 1e-12, 1).unwrap();
        assert!(t.passed);
        assert!(closedness_residuals(&OneForm::new([(Var::U, Expr::one())])).is_empty());
    }

    #[test]
    fn fibre_integral_of_dw2() {
        let q = path_integrate(
            &dw2(),
            &fibre_box(),
            Point::new(0.3, 1.0, 0.0),
            Point::new(0.3, 1.0, 2.0),
            QUAD_TOL,
        )
        .unwrap();
        assert!((q.value - 1.0).abs() < 1e-12);
        let same = path_integrate(
            &dw2(),
            &fibre_box(),
            Point::new(0.3, 1.0, 0.0),
            Point::new(0.3, 1.0, 0.0),
            QUAD_TOL,
        )
        .unwrap();
        assert_eq!(same.value, 0.0);
    }

    #[test]
    fn line_integral_is_additive_over_polylines() {
        let f = OneForm::new([(Var::X, parse("u").unwrap()), (Var::U, parse("x").unwrap())]);
        let a = Point::new(0.0, 1.0, 0.0);
        let b = Point::new(1.0, 2.0, 0.0);
        let direct = line_integral(&f, &[a, b], 1e-12).unwrap().value;
        let bent = line_integral(&f, &[a, Point::new(1.0, 1.0, 0.0), b], 1e-12)
            .unwrap()
            .value;
        assert!((direct - 2.0).abs() < 1e-12);
        assert!((bent - 2.0).abs() < 1e-12);
    }

    #[test]
    fn domain_errors_surface() {
        let f = OneForm::new([(Var::U, parse("1/u").unwrap())]);
        let r = line_integral(
            &f,
            &[Point::new(0.0, -1.0, 0.0), Point::new(0.0, 1.0, 0.0)],
            1e-10,
        );
        assert!(r.is_err());
    }

    #[test]
    fn potential_reconstructs_known_function() {
        // d(x*u + ux^2) on the jet box
        let f = OneForm::new([
            (Var::X, parse("u").unwrap()),
            (Var::U, parse("x").unwrap()),
            (Var::Ux, parse("2*ux").unwrap()),
        ]);
        let p = Potential::new(f, fibre_box(), Point::new(0.0, 1.0, 0.0), QUAD_TOL);
        let v = p.at(Point::new(0.7, 1.5, -1.2)).unwrap();
        assert!((v - (0.7 * 1.5 + 1.44)).abs() < 1e-10);
    }

    #[test]
    fn fibrewise_potential_and_x_derivative() {
        // w = x*u*ux restricted to fibres; base section ux = 0 gives w itself.
        let f = OneForm::new([
            (Var::U, parse("x*ux").unwrap()),
            (Var::Ux, parse("x*u").unwrap()),
        ]);
        let p = Potential::new(f, fibre_box(), Point::new(0.0, 1.0, 0.0), QUAD_TOL);
        let t = Point::new(0.4, 1.5, 1.0);
        assert!((p.at(t).unwrap() - 0.6).abs() < 1e-12);
        assert!((p.x_derivative(t).unwrap() - 1.5).abs() < 1e-12);
    }
}
