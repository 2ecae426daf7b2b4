//! Commuting generalized symmetries built from two non-equivalent λ's.

use serde::Serialize;
use thiserror::Error;

use crate::check::{Check, Sampling};
use crate::expr::{Expr, Var};
use crate::jetfield::{apply, evolution_field, lie_bracket, JetField};
use crate::sample::{is_zero_sampled, SampleBox, SampleError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CommuteError {
    #[error("equivalent symmetry pairs: λ1 − λ2 vanishes identically")]
    Equivalent,
    #[error("precondition failed: {}", names(.0))]
    Precondition(Vec<Check>),
    #[error(transparent)]
    Sample(#[from] SampleError),
}

fn names(checks: &[Check]) -> String {
    checks
        .iter()
        .map(|c| c.name.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

/// The symmetry data a commuting system is built from. The `g`'s are given in
/// jet coordinates (any reduced-coordinate form substituted already).
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryInput {
    pub phi: Expr,
    pub lambda1: Expr,
    pub lambda2: Expr,
    pub f1: Expr,
    pub f2: Expr,
    pub g1: Expr,
    pub g2: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutingData {
    pub phi: Expr,
    pub lambda1: Expr,
    pub lambda2: Expr,
    pub rho: Expr,
    pub f1: Expr,
    pub f2: Expr,
    pub rho1: Expr,
    pub rho2: Expr,
    pub g1: Expr,
    pub g2: Expr,
    pub h1: Expr,
    pub h2: Expr,
    pub x1: JetField,
    pub x2: JetField,
    pub y1: JetField,
    pub y2: JetField,
    pub z1: JetField,
    pub z2: JetField,
}

/// `∂u + λ ∂ux`.
pub fn x_field(lambda: &Expr) -> JetField {
    JetField::new(Expr::zero(), Expr::one(), lambda.clone())
}

/// `ρ = (X1(λ2) − X2(λ1)) / (λ1 − λ2)`.
pub fn rho_fn(lambda1: &Expr, lambda2: &Expr) -> Result<Expr, CommuteError> {
    let den = lambda1 - lambda2;
    if den.is_zero() {
        return Err(CommuteError::Equivalent);
    }
    let num = apply(&x_field(lambda1), lambda2) - apply(&x_field(lambda2), lambda1);
    Ok(num / den)
}

/// `[X2(f1) − ρ f1, X1(f2) − ρ f2]`.
pub fn verify_f_pair(
    f1: &Expr,
    f2: &Expr,
    rho: &Expr,
    lambda1: &Expr,
    lambda2: &Expr,
) -> [Expr; 2] {
    [
        apply(&x_field(lambda2), f1) - rho * f1,
        apply(&x_field(lambda1), f2) - rho * f2,
    ]
}

/// `[A(g1) − ρ1 g1, Y2(g1), A(g2) − ρ2 g2, Y1(g2)]`.
pub fn verify_g_pair(
    g1: &Expr,
    g2: &Expr,
    rho1: &Expr,
    rho2: &Expr,
    phi: &Expr,
    y1: &JetField,
    y2: &JetField,
) -> [Expr; 4] {
    let a = evolution_field(phi);
    [
        apply(&a, g1) - rho1 * g1,
        apply(y2, g1),
        apply(&a, g2) - rho2 * g2,
        apply(y1, g2),
    ]
}

/// `ρ_i = λ_i − A(f_i)/f_i`.
pub fn rho_i(lambda: &Expr, f: &Expr, phi: &Expr) -> Expr {
    lambda - apply(&evolution_field(phi), f) / f
}

/// Checks that `e` is evaluable and bounded away from zero at every sample.
pub fn nonvanishing(
    name: &str,
    e: &Expr,
    sbox: &SampleBox,
    s: &Sampling,
) -> Result<Check, SampleError> {
    let points = sbox.points(s.samples, s.seed)?;
    let mut smallest = f64::INFINITY;
    let mut at = None;
    for p in &points {
        let v = e.eval(p).map(f64::abs).unwrap_or(0.0);
        if v < smallest {
            smallest = v;
            at = Some(*p);
        }
    }
    let passed = smallest > 1e-12;
    let mut c = Check::bound(format!("{name} nonvanishing"), smallest, 1e-12);
    c.passed = passed;
    c.value = Some(smallest);
    if !passed {
        c.witness = at.map(|p| crate::sample::witness_of(&p, Var::JET));
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutingOutcome {
    pub data: CommutingData,
    /// f-pair, g-pair and nonvanishing checks.
    pub preconditions: Vec<Check>,
    /// The six bracket identities.
    pub brackets: Vec<Check>,
    /// `A(h_i) − λ_i h_i ≡ 0`.
    pub h_checks: Vec<Check>,
}

impl CommutingOutcome {
    pub fn passed(&self) -> bool {
        self.preconditions
            .iter()
            .chain(&self.brackets)
            .chain(&self.h_checks)
            .all(|c| c.passed)
    }
}

fn zero_check(name: &str, e: &Expr, sbox: &SampleBox, s: &Sampling) -> Result<Check, SampleError> {
    let t = is_zero_sampled(e, sbox, s.samples, s.tol, s.seed)?;
    Ok(Check::from_zero_test(name, &t))
}

fn field_check(
    name: &str,
    f: &JetField,
    sbox: &SampleBox,
    s: &Sampling,
) -> Result<Check, SampleError> {
    let t = f.is_zero_sampled(sbox, s.samples, s.tol, s.seed)?;
    Ok(Check::from_zero_test(name, &t))
}

/// Builds ρ, ρ_i, h_i and the fields X_i, Y_i, Z_i, verifying the f- and
/// g-conditions first and then the six bracket relations.
pub fn build_commuting(
    input: &SymmetryInput,
    sbox: &SampleBox,
    s: &Sampling,
) -> Result<CommutingOutcome, CommuteError> {
    let SymmetryInput {
        phi,
        lambda1,
        lambda2,
        f1,
        f2,
        g1,
        g2,
    } = input;
    let diff = lambda1 - lambda2;
    if diff.is_zero() || is_zero_sampled(&diff, sbox, s.samples, s.tol, s.seed)?.passed {
        return Err(CommuteError::Equivalent);
    }
    let rho = rho_fn(lambda1, lambda2)?;
    let x1 = x_field(lambda1);
    let x2 = x_field(lambda2);
    let y1 = x1.scale(f1);
    let y2 = x2.scale(f2);
    let rho1 = rho_i(lambda1, f1, phi);
    let rho2 = rho_i(lambda2, f2, phi);
    let h1 = f1 * g1;
    let h2 = f2 * g2;
    let z1 = x1.scale(&h1);
    let z2 = x2.scale(&h2);

    let mut pre = vec![
        nonvanishing("lambda1 - lambda2", &diff, sbox, s)?,
        nonvanishing("f1", f1, sbox, s)?,
        nonvanishing("f2", f2, sbox, s)?,
        nonvanishing("g1", g1, sbox, s)?,
        nonvanishing("g2", g2, sbox, s)?,
    ];
    let [rf1, rf2] = verify_f_pair(f1, f2, &rho, lambda1, lambda2);
    pre.push(zero_check("X2(f1) - rho*f1", &rf1, sbox, s)?);
    pre.push(zero_check("X1(f2) - rho*f2", &rf2, sbox, s)?);
    let [ga, gb, gc, gd] = verify_g_pair(g1, g2, &rho1, &rho2, phi, &y1, &y2);
    pre.push(zero_check("A(g1) - rho1*g1", &ga, sbox, s)?);
    pre.push(zero_check("Y2(g1)", &gb, sbox, s)?);
    pre.push(zero_check("A(g2) - rho2*g2", &gc, sbox, s)?);
    pre.push(zero_check("Y1(g2)", &gd, sbox, s)?);
    let failed: Vec<Check> = pre.iter().filter(|c| !c.passed).cloned().collect();
    if !failed.is_empty() {
        return Err(CommuteError::Precondition(failed));
    }

    let a = evolution_field(phi);
    let brackets = vec![
        field_check(
            "[Y1,A] - rho1*Y1",
            &lie_bracket(&y1, &a).sub(&y1.scale(&rho1)),
            sbox,
            s,
        )?,
        field_check(
            "[Y2,A] - rho2*Y2",
            &lie_bracket(&y2, &a).sub(&y2.scale(&rho2)),
            sbox,
            s,
        )?,
        field_check("[Y1,Y2]", &lie_bracket(&y1, &y2), sbox, s)?,
        field_check("[Z1,A]", &lie_bracket(&z1, &a), sbox, s)?,
        field_check("[Z2,A]", &lie_bracket(&z2, &a), sbox, s)?,
        field_check("[Z1,Z2]", &lie_bracket(&z1, &z2), sbox, s)?,
    ];
    let h_checks = vec![
        zero_check(
            "A(h1) - lambda1*h1",
            &(apply(&a, &h1) - lambda1 * &h1),
            sbox,
            s,
        )?,
        zero_check(
            "A(h2) - lambda2*h2",
            &(apply(&a, &h2) - lambda2 * &h2),
            sbox,
            s,
        )?,
    ];

    Ok(CommutingOutcome {
        data: CommutingData {
            phi: phi.clone(),
            lambda1: lambda1.clone(),
            lambda2: lambda2.clone(),
            rho,
            f1: f1.clone(),
            f2: f2.clone(),
            rho1,
            rho2,
            g1: g1.clone(),
            g2: g2.clone(),
            h1,
            h2,
            x1,
            x2,
            y1,
            y2,
            z1,
            z2,
        },
        preconditions: pre,
        brackets,
        h_checks,
    })
}
