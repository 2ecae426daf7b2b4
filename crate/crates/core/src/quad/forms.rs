//! The forms and factors attached to a commuting system.

use super::{OneForm, Potential, QuadError};
use crate::commute::CommutingData;
use crate::expr::{Expr, Var};
use crate::sample::Point;

/// `dw1`, `dw2` on the fibres `x = const`:
/// `(w1)_u = λ1/(f2(λ1−λ2))`, `(w1)_ux = −1/(f2(λ1−λ2))`, and symmetrically.
pub fn w_forms(d: &CommutingData) -> (OneForm, OneForm) {
    let fibre = |lambda: &Expr, f_other: &Expr, diff: Expr| {
        let den = f_other * diff;
        OneForm::new([
            (Var::U, lambda / &den),
            (Var::Ux, (Expr::one() / den).neg()),
        ])
    };
    (
        fibre(&d.lambda1, &d.f2, &d.lambda1 - &d.lambda2),
        fibre(&d.lambda2, &d.f1, &d.lambda2 - &d.lambda1),
    )
}

/// `μ1 = 1/(h2(λ2−λ1))`, `μ2 = 1/(h1(λ1−λ2))`.
pub fn integrating_factors(d: &CommutingData) -> (Expr, Expr) {
    (
        Expr::one() / (&d.h2 * (&d.lambda2 - &d.lambda1)),
        Expr::one() / (&d.h1 * (&d.lambda1 - &d.lambda2)),
    )
}

/// `dI = μ(λ ux − φ) dx − λ μ du + μ dux` for each pair `(μ_i, λ_i)`.
pub fn i_forms(d: &CommutingData) -> (OneForm, OneForm) {
    let (mu1, mu2) = integrating_factors(d);
    let form = |mu: &Expr, lambda: &Expr| {
        OneForm::new([
            (Var::X, mu * (lambda * Expr::ux() - &d.phi)),
            (Var::U, (lambda * mu).neg()),
            (Var::Ux, mu.clone()),
        ])
    };
    (form(&mu1, &d.lambda1), form(&mu2, &d.lambda2))
}

/// `M = 1/(h1 h2 (λ2 − λ1))`.
pub fn jacobi_last_multiplier(d: &CommutingData) -> Expr {
    Expr::one() / (Expr::product([d.h1.clone(), d.h2.clone()]) * (&d.lambda2 - &d.lambda1))
}

/// `M_x + ∂u(M ux) + ∂ux(M φ)`.
pub fn jlm_divergence(m: &Expr, phi: &Expr) -> Expr {
    Expr::sum([
        m.diff(Var::X),
        (m * Expr::ux()).diff(Var::U),
        (m * phi).diff(Var::Ux),
    ])
}

/// `∂u(A w)·w_ux − ∂ux(A w)·w_u`, which vanishes iff `A(w)` is a function of
/// `(x, w)` alone. Only the fibre components of `dw` enter, since
/// `∂u(w_x) = ∂x(w_u)` and likewise for `ux`.
pub fn reduced_dependence(dw: &OneForm, phi: &Expr) -> Expr {
    let wu = dw.get(Var::U).cloned().unwrap_or_else(Expr::zero);
    let wux = dw.get(Var::Ux).cloned().unwrap_or_else(Expr::zero);
    let aw_u = Expr::sum([
        wu.diff(Var::X),
        Expr::ux() * wu.diff(Var::U),
        phi.diff(Var::U) * &wux,
        phi * wux.diff(Var::U),
    ]);
    let aw_ux = Expr::sum([
        wux.diff(Var::X),
        wu.clone(),
        Expr::ux() * wu.diff(Var::Ux),
        phi.diff(Var::Ux) * &wux,
        phi * wux.diff(Var::Ux),
    ]);
    aw_u * &wux - aw_ux * &wu
}

/// `(w, A(w))` at `p` for the fibrewise potential `w`.
pub fn reduced_rhs_at(w: &Potential, phi: &Expr, p: Point) -> Result<(f64, f64), QuadError> {
    let value = w.at(p)?;
    let wx = w.x_derivative(p)?;
    let env = crate::expr::Env::from(p);
    let comp = |v: Var| -> Result<f64, QuadError> {
        match w.form.get(v) {
            Some(c) => c
                .eval(&env)
                .map_err(|source| QuadError::Domain { point: p, source }),
            None => Ok(0.0),
        }
    };
    let f = phi
        .eval(&env)
        .map_err(|source| QuadError::Domain { point: p, source })?;
    Ok((value, wx + p.ux * comp(Var::U)? + f * comp(Var::Ux)?))
}

/// `ν1 = 1/g2(x, w)`, `ν2 = 1/g1(x, w)` from the reduced-coordinate `g`'s.
pub fn reduced_integrating_factors(g1_reduced: &Expr, g2_reduced: &Expr) -> (Expr, Expr) {
    (Expr::one() / g2_reduced, Expr::one() / g1_reduced)
}

/// `ν_x + ∂w(φ ν)` for the reduced equation `w' = φ(x, w)`.
pub fn reduced_factor_residual(nu: &Expr, phi_w: &Expr) -> Expr {
    nu.diff(Var::X) + (phi_w * nu).diff(Var::W)
}

/// `ν̃_i = 1/(f_i g_i)` on the graph `ux = H_i(x, u, C)`.
pub fn auxiliary_factor(d: &CommutingData, h: &Expr, i: usize) -> Expr {
    let hi = if i == 1 { &d.h1 } else { &d.h2 };
    (Expr::one() / hi).subst(Var::Ux, h)
}

/// Residuals certifying an auxiliary equation `ux = H` and its factor `ν̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryResiduals {
    /// `H_u − λ(x, u, H)`: the graph is invariant under the λ-prolonged field.
    pub lambda_relation: Expr,
    /// `H_x + H H_u − φ(x, u, H)`: solutions of `ux = H` solve the ODE.
    pub ode_relation: Expr,
    /// `ν̃_x + (H ν̃)_u`.
    pub factor_pde: Expr,
}

pub fn auxiliary_relation_residuals(
    h: &Expr,
    lambda: &Expr,
    phi: &Expr,
    nu: &Expr,
) -> AuxiliaryResiduals {
    let hu = h.diff(Var::U);
    AuxiliaryResiduals {
        lambda_relation: &hu - lambda.subst(Var::Ux, h),
        ode_relation: h.diff(Var::X) + h * &hu - phi.subst(Var::Ux, h),
        factor_pde: nu.diff(Var::X) + (h * nu).diff(Var::U),
    }
}
