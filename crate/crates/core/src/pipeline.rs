//! The end-to-end procedure: symmetry checks, ρ, the f- and g-conditions,
//! invariants, reduced equations, first integrals and factors, each step
//! recorded as named checks in a [`Report`].

use serde::Serialize;

use crate::catalog::Problem;
use crate::check::{Check, Sampling};
use crate::commute::{self, build_commuting, CommuteError, CommutingData, SymmetryInput};
use crate::expr::{Env, Expr, Var};
use crate::jetfield::{apply, evolution_field, JetField, LambdaPair};
use crate::numverify::{
    check_closed_form, drift_by_runs, form_drift, integrate_ode2, reduction_residual, Trajectory,
};
use crate::quad::{self, closedness_residuals, OneForm, Potential, QUAD_TOL};
use crate::sample::{is_zero_sampled, Interval, Point, SampleBox, LOCUS_MARGIN};
use crate::spec::TrajectorySpec;
use crate::symcheck::{are_equivalent, determining_residual, symmetry_defect};

/// Branches of the procedure: `central` integrates the I-forms directly,
/// `lateral` goes through the reduced and auxiliary equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Central,
    Lateral,
    Both,
}

impl Route {
    fn central(self) -> bool {
        self != Route::Lateral
    }

    fn lateral(self) -> bool {
        self != Route::Central
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub sampling: Sampling,
    pub route: Route,
    /// Bound on first-integral drift along trajectories.
    pub drift_tol: f64,
    /// Bound on the spread of potential minus reference closed form.
    pub potential_tol: f64,
    /// Bound on the reduced-equation residual along trajectories.
    pub reduction_tol: f64,
    /// Bound on closed-form vs. integrated endpoint mismatch.
    pub endpoint_tol: f64,
    pub integrate_tol: f64,
    /// Integrator tolerance for closed-form endpoint comparisons. Tighter than
    /// `integrate_tol` because solutions may pass a branch point of the ODE.
    pub solution_integrate_tol: f64,
    pub quad_tol: f64,
    pub potential_points: usize,
}

impl Default for RunOptions {
    fn default() -> RunOptions {
        RunOptions {
            sampling: Sampling::default(),
            route: Route::Both,
            drift_tol: 1e-6,
            potential_tol: 1e-7,
            reduction_tol: 1e-5,
            endpoint_tol: 1e-6,
            integrate_tol: 1e-10,
            solution_integrate_tol: 1e-13,
            quad_tol: QUAD_TOL,
            potential_points: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadSummary {
    pub form: String,
    pub points: usize,
    pub max_estimated_error: f64,
    pub max_closedness_residual: f64,
    pub max_path_vertices: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Section {
    pub name: String,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub quadratures: Vec<QuadSummary>,
}

impl Section {
    fn new(name: &str) -> Section {
        Section {
            name: name.to_string(),
            checks: Vec::new(),
            notes: Vec::new(),
            quadratures: Vec::new(),
        }
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
    pub route: Route,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub problem: String,
    pub settings: Settings,
    pub sections: Vec<Section>,
    pub passed: bool,
    pub checks: usize,
    pub failed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Report {
    fn new(problem: &str, o: &RunOptions) -> Report {
        Report {
            problem: problem.to_string(),
            settings: Settings {
                tol: o.sampling.tol,
                samples: o.sampling.samples,
                seed: o.sampling.seed,
                route: o.route,
            },
            sections: Vec::new(),
            passed: false,
            checks: 0,
            failed: 0,
            error: None,
        }
    }

    fn finish(mut self) -> Report {
        self.checks = self.sections.iter().map(|s| s.checks.len()).sum();
        self.failed = self
            .sections
            .iter()
            .flat_map(|s| &s.checks)
            .filter(|c| !c.passed)
            .count();
        self.passed = self.error.is_none() && self.failed == 0;
        self
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.sections
            .iter()
            .flat_map(|s| &s.checks)
            .find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

struct Ctx<'a> {
    p: &'a Problem,
    o: &'a RunOptions,
}

impl Ctx<'_> {
    fn s(&self) -> Sampling {
        self.o.sampling
    }

    fn zero_in(&self, name: &str, e: &Expr, sbox: &SampleBox) -> Check {
        let s = self.s();
        match is_zero_sampled(e, sbox, s.samples, s.tol, s.seed) {
            Ok(t) => Check::from_zero_test(name, &t),
            Err(err) => Check::failed(name, err.to_string()),
        }
    }

    fn zero(&self, name: &str, e: &Expr) -> Check {
        self.zero_in(name, e, &self.p.sbox)
    }

    fn field(&self, name: &str, f: &JetField) -> Check {
        let s = self.s();
        match f.is_zero_sampled(&self.p.sbox, s.samples, s.tol, s.seed) {
            Ok(t) => Check::from_zero_test(name, &t),
            Err(err) => Check::failed(name, err.to_string()),
        }
    }

    fn sample_points(&self, n: usize) -> Result<Vec<Point>, String> {
        let envs = self
            .p
            .sbox
            .points(n, self.s().seed)
            .map_err(|e| e.to_string())?;
        Ok(envs
            .iter()
            .map(|e| {
                Point::new(
                    e.get(Var::X).unwrap(),
                    e.get(Var::U).unwrap(),
                    e.get(Var::Ux).unwrap(),
                )
            })
            .collect())
    }

    /// Spread of `potential − scale·reference` over sampled points.
    fn potential_vs_closed(
        &self,
        sec: &mut Section,
        label: &str,
        pot: &Potential,
        reference: &Expr,
        scale: f64,
    ) {
        let name = format!("{label} potential vs closed form");
        let points = match self.sample_points(self.o.potential_points) {
            Ok(p) => p,
            Err(e) => return sec.checks.push(Check::failed(name, e)),
        };
        let mut diffs = Vec::with_capacity(points.len());
        let mut summary = QuadSummary {
            form: label.to_string(),
            points: points.len(),
            max_estimated_error: 0.0,
            max_closedness_residual: 0.0,
            max_path_vertices: 0,
        };
        for pt in &points {
            let q = match pot.integrate_to(*pt) {
                Ok(q) => q,
                Err(e) => return sec.checks.push(Check::failed(name, e.to_string())),
            };
            let r = match reference.eval(&Env::from(*pt)) {
                Ok(r) => r,
                Err(e) => return sec.checks.push(Check::failed(name, e.to_string())),
            };
            summary.max_estimated_error = summary.max_estimated_error.max(q.estimated_error);
            summary.max_closedness_residual =
                summary.max_closedness_residual.max(q.closedness_residual);
            summary.max_path_vertices = summary.max_path_vertices.max(q.path.len());
            diffs.push(q.value - scale * r);
        }
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n).sqrt();
        sec.checks.push(
            Check::bound(name, sd, self.o.potential_tol)
                .with_value(mean)
                .with_note("value is the mean offset, i.e. the additive constant"),
        );
        sec.quadratures.push(summary);
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:e}")
}

/// Runs the whole procedure on `p`. Failures are recorded in the report;
/// a step whose outputs later steps need ends the run with `error` set.
pub fn run_pipeline(p: &Problem, o: &RunOptions) -> Report {
    let mut report = Report::new(&p.name, o);
    let ctx = Ctx { p, o };
    if let Err(e) = steps(&ctx, &mut report) {
        report.error = Some(e);
    }
    report.finish()
}

fn steps(ctx: &Ctx, report: &mut Report) -> Result<(), String> {
    let p = ctx.p;
    let s = ctx.s();

    // Step 0: the two λ's are symmetries and are not equivalent.
    let mut sec = Section::new("symmetries");
    let pair1 = LambdaPair::canonical(p.lambda1.clone());
    let pair2 = LambdaPair::canonical(p.lambda2.clone());
    sec.checks.push(ctx.zero(
        "determining equation, lambda1",
        &determining_residual(&p.lambda1, &p.phi),
    ));
    sec.checks.push(ctx.zero(
        "determining equation, lambda2",
        &determining_residual(&p.lambda2, &p.phi),
    ));
    sec.checks.push(ctx.field(
        "symmetry defect, (d/du, lambda1)",
        &symmetry_defect(&pair1, &p.phi),
    ));
    sec.checks.push(ctx.field(
        "symmetry defect, (d/du, lambda2)",
        &symmetry_defect(&pair2, &p.phi),
    ));
    let distinct = p.lambda1.clone() - p.lambda2.clone();
    if distinct.is_zero() {
        report.sections.push(sec);
        return Err("equivalent symmetry pairs: lambda1 - lambda2 vanishes identically".into());
    }
    match are_equivalent(&pair1, &pair2, &p.phi, &p.sbox, s.samples, s.tol, s.seed) {
        Ok(eq) => {
            let mut c = Check::bound(
                "pairs non-equivalent",
                if eq.equivalent { 1.0 } else { 0.0 },
                0.0,
            )
            .with_value(eq.test.max_relative);
            c.note = Some("value is the largest relative determinant residual".into());
            sec.checks.push(c);
            if eq.equivalent {
                report.sections.push(sec);
                return Err(
                    "equivalent symmetry pairs: the determinant vanishes on the box".into(),
                );
            }
        }
        Err(e) => sec
            .checks
            .push(Check::failed("pairs non-equivalent", e.to_string())),
    }
    report.sections.push(sec);

    // Step 1: ρ.
    let mut sec = Section::new("rho");
    let rho = commute::rho_fn(&p.lambda1, &p.lambda2).map_err(|e| e.to_string())?;
    match commute::nonvanishing("lambda1 - lambda2", &distinct, &p.sbox, &s) {
        Ok(c) => sec.checks.push(c),
        Err(e) => sec.checks.push(Check::failed(
            "lambda1 - lambda2 nonvanishing",
            e.to_string(),
        )),
    }
    let rho_zero = is_zero_sampled(&rho, &p.sbox, s.samples, s.tol, s.seed).is_ok_and(|t| t.passed);
    if rho_zero {
        let x1 = commute::x_field(&p.lambda1);
        let x2 = commute::x_field(&p.lambda2);
        sec.checks
            .push(ctx.zero("rho = 0: X1(lambda2)", &apply(&x1, &p.lambda2)));
        sec.checks
            .push(ctx.zero("rho = 0: X2(lambda1)", &apply(&x2, &p.lambda1)));
        sec.notes.push("rho vanishes on the box".into());
    }
    report.sections.push(sec);

    // Step 2: the f-pair.
    let mut sec = Section::new("f-pair");
    for (name, f) in [("f1", &p.f1), ("f2", &p.f2)] {
        match commute::nonvanishing(name, f, &p.sbox, &s) {
            Ok(c) => sec.checks.push(c),
            Err(e) => sec
                .checks
                .push(Check::failed(format!("{name} nonvanishing"), e.to_string())),
        }
    }
    let [r1, r2] = commute::verify_f_pair(&p.f1, &p.f2, &rho, &p.lambda1, &p.lambda2);
    sec.checks.push(ctx.zero("X2(f1) - rho*f1", &r1));
    sec.checks.push(ctx.zero("X1(f2) - rho*f2", &r2));
    let f_ok = sec.passed();
    report.sections.push(sec);
    if !f_ok {
        return Err("the f-pair conditions fail; invariants cannot be built".into());
    }

    // Step 3: invariants w1, w2 by fibrewise quadrature.
    let pre = CommutingData {
        phi: p.phi.clone(),
        lambda1: p.lambda1.clone(),
        lambda2: p.lambda2.clone(),
        rho: rho.clone(),
        f1: p.f1.clone(),
        f2: p.f2.clone(),
        rho1: Expr::zero(),
        rho2: Expr::zero(),
        g1: Expr::one(),
        g2: Expr::one(),
        h1: p.f1.clone(),
        h2: p.f2.clone(),
        x1: JetField::zero(),
        x2: JetField::zero(),
        y1: JetField::zero(),
        y2: JetField::zero(),
        z1: JetField::zero(),
        z2: JetField::zero(),
    };
    let (dw1, dw2) = quad::w_forms(&pre);
    let mut sec = Section::new("invariants");
    let closed_w = [p.closed.w1.as_ref(), p.closed.w2.as_ref()];
    let w_pots: Vec<Potential> = [&dw1, &dw2]
        .iter()
        .map(|f| Potential::new((*f).clone(), p.sbox.clone(), p.base, ctx.o.quad_tol))
        .collect();
    for (k, form) in [&dw1, &dw2].into_iter().enumerate() {
        let i = k + 1;
        for (a, b, r) in closedness_residuals(form) {
            sec.checks
                .push(ctx.zero(&format!("dw{i} closed ({a}, {b})"), &r));
        }
        if let Some(w) = closed_w[k] {
            for v in [Var::U, Var::Ux] {
                let r = w.diff(v) - form.get(v).cloned().unwrap_or_else(Expr::zero);
                sec.checks
                    .push(ctx.zero(&format!("closed w{i}: d/d{v} matches dw{i}"), &r));
            }
            ctx.potential_vs_closed(&mut sec, &format!("w{i}"), &w_pots[k], w, 1.0);
        }
    }
    report.sections.push(sec);

    // Step 4: reduced equations, then the g-pair and commuting fields.
    let mut sec = Section::new("reduced");
    let closed_phi = [p.closed.phi1.as_ref(), p.closed.phi2.as_ref()];
    for (k, form) in [&dw1, &dw2].into_iter().enumerate() {
        let i = k + 1;
        sec.checks.push(ctx.zero(
            &format!("A(w{i}) depends only on (x, w{i})"),
            &quad::reduced_dependence(form, &p.phi),
        ));
        if let (Some(w), Some(phi_i)) = (closed_w[k], closed_phi[k]) {
            let a = evolution_field(&p.phi);
            let r = apply(&a, w) - phi_i.subst(Var::W, w);
            sec.checks
                .push(ctx.zero(&format!("A(w{i}) - phi{i}(x, w{i})"), &r));
            sec.checks
                .push(reduced_rhs_numeric(ctx, i, &w_pots[k], w, phi_i));
        }
    }
    report.sections.push(sec);

    let (Some(g1), Some(g2)) = (p.g1.clone(), p.g2.clone()) else {
        let mut sec = Section::new("commuting");
        sec.notes.push(
            "g1, g2 not supplied: commuting symmetries, first integrals and factors skipped".into(),
        );
        report.sections.push(sec);
        return Ok(());
    };
    let input = SymmetryInput {
        phi: p.phi.clone(),
        lambda1: p.lambda1.clone(),
        lambda2: p.lambda2.clone(),
        f1: p.f1.clone(),
        f2: p.f2.clone(),
        g1,
        g2,
    };
    let mut sec = Section::new("commuting");
    let outcome = match build_commuting(&input, &p.sbox, &s) {
        Ok(o) => o,
        Err(CommuteError::Precondition(failed)) => {
            sec.checks.extend(failed);
            report.sections.push(sec);
            return Err("the g-pair conditions fail; commuting symmetries cannot be built".into());
        }
        Err(e) => {
            report.sections.push(sec);
            return Err(e.to_string());
        }
    };
    sec.checks.extend(outcome.preconditions.iter().cloned());
    sec.checks.extend(outcome.brackets.iter().cloned());
    sec.checks.extend(outcome.h_checks.iter().cloned());
    let d = outcome.data;
    for (i, lambda, f, rho_i) in [
        (1, &d.lambda1, &d.f1, &d.rho1),
        (2, &d.lambda2, &d.f2, &d.rho2),
    ] {
        let name = format!("(d/du, lambda{i}) equivalent to (f{i} d/du, rho{i})");
        let a = LambdaPair::canonical(lambda.clone());
        let b = LambdaPair::new(Expr::zero(), f.clone(), rho_i.clone());
        match are_equivalent(&a, &b, &p.phi, &p.sbox, s.samples, s.tol, s.seed) {
            Ok(eq) => sec.checks.push(
                Check::bound(name, if eq.equivalent { 0.0 } else { 1.0 }, 0.0)
                    .with_value(eq.test.max_relative),
            ),
            Err(e) => sec.checks.push(Check::failed(name, e.to_string())),
        }
    }
    sec.notes.push(format!("rho = {}", d.rho));
    report.sections.push(sec);

    let (di1, di2) = quad::i_forms(&d);
    if ctx.o.route.central() {
        report.sections.push(central(ctx, &d, &di1, &di2));
    }
    if ctx.o.route.lateral() {
        report.sections.push(lateral(ctx, &d));
    }

    let trajectories = integrate_all(ctx, report);
    let mut sec = Section::new("trajectories");
    for (k, (spec, traj)) in trajectories.iter().enumerate() {
        let tag = format!("trajectory {k}");
        sec.notes.push(format!(
            "{tag}: ic ({}, {}, {}) to x = {}, {} steps, {} rejected",
            spec.ic[0], spec.ic[1], spec.ic[2], spec.x_end, traj.stats.steps, traj.stats.rejected
        ));
        if ctx.o.route.central() {
            drift_checks(ctx, &mut sec, &tag, traj, [&di1, &di2]);
        }
        if ctx.o.route.lateral() {
            for (k, (w, phi_i)) in closed_w.iter().zip(closed_phi).enumerate() {
                if let (Some(w), Some(phi_i)) = (w, phi_i) {
                    let name = format!("{tag}: reduced equation {} along solution", k + 1);
                    match reduction_residual(w, phi_i, traj, p.loci()) {
                        Ok(r) => sec.checks.push(
                            Check::bound(name, r.residual, ctx.o.reduction_tol)
                                .with_value(r.points as f64),
                        ),
                        Err(e) => sec.checks.push(Check::failed(name, e.to_string())),
                    }
                }
            }
        }
    }
    report.sections.push(sec);
    report.sections.push(solutions(ctx));
    Ok(())
}

/// `A(w)` computed from the quadrature potential against `phi_i(x, w)`,
/// with the gauge offset read off the closed form on the base section.
fn reduced_rhs_numeric(ctx: &Ctx, i: usize, pot: &Potential, w: &Expr, phi_i: &Expr) -> Check {
    let name = format!("A(w{i}) from quadrature vs phi{i}");
    let points = match ctx.sample_points(10) {
        Ok(p) => p,
        Err(e) => return Check::failed(name, e),
    };
    let mut worst: f64 = 0.0;
    for pt in points {
        let r = (|| -> Result<f64, String> {
            let (wv, aw) = quad::reduced_rhs_at(pot, &ctx.p.phi, pt).map_err(|e| e.to_string())?;
            let section = pot.base_for(&pt);
            let offset = w.eval(&Env::from(section)).map_err(|e| e.to_string())?;
            let rhs = phi_i
                .eval(&Env::new().with(Var::X, pt.x).with(Var::W, wv + offset))
                .map_err(|e| e.to_string())?;
            Ok((aw - rhs).abs() / (1.0 + rhs.abs()))
        })();
        match r {
            Ok(v) => worst = worst.max(v),
            Err(e) => return Check::failed(name, e),
        }
    }
    Check::bound(name, worst, 1e-8)
}

fn central(ctx: &Ctx, d: &CommutingData, di1: &OneForm, di2: &OneForm) -> Section {
    let p = ctx.p;
    let mut sec = Section::new("first-integrals");
    let a = evolution_field(&d.phi);
    let (mu1, mu2) = quad::integrating_factors(d);
    let m = quad::jacobi_last_multiplier(d);
    let closed_i = [p.closed.i1.as_ref(), p.closed.i2.as_ref()];
    let closed_mu = [p.closed.mu1.as_ref(), p.closed.mu2.as_ref()];
    let forms = [di1, di2];
    for (k, form) in forms.into_iter().enumerate() {
        let i = k + 1;
        let (x_i, z_j, lambda, mu) = if i == 1 {
            (&d.x1, &d.z2, &d.lambda1, &mu1)
        } else {
            (&d.x2, &d.z1, &d.lambda2, &mu2)
        };
        for (va, vb, r) in closedness_residuals(form) {
            sec.checks
                .push(ctx.zero(&format!("dI{i} closed ({va}, {vb})"), &r));
        }
        sec.checks
            .push(ctx.zero(&format!("A(I{i})"), &form.contract(a.components())));
        sec.checks
            .push(ctx.zero(&format!("X{i}(I{i})"), &form.contract(x_i.components())));
        let j = 3 - i;
        sec.checks.push(ctx.zero(
            &format!("Z{j}(I{i}) - 1"),
            &(form.contract(z_j.components()) - 1),
        ));
        let get = |v: Var| form.get(v).cloned().unwrap_or_else(Expr::zero);
        sec.checks.push(ctx.zero(
            &format!("(I{i})_x - mu{i}*(lambda{i}*ux - phi)"),
            &(get(Var::X) - mu * (lambda * Expr::ux() - &d.phi)),
        ));
        sec.checks.push(ctx.zero(
            &format!("(I{i})_u + lambda{i}*mu{i}"),
            &(get(Var::U) + lambda * mu),
        ));
        sec.checks
            .push(ctx.zero(&format!("(I{i})_ux - mu{i}"), &(get(Var::Ux) - mu)));
        if let Some(c) = closed_mu[k] {
            sec.checks
                .push(ctx.zero(&format!("mu{i} matches closed form"), &(mu - c)));
        }
        if let Some(c) = closed_i[k] {
            for v in Var::JET {
                let r = Expr::float(c.scale) * c.expr.diff(v) - get(v);
                sec.checks
                    .push(ctx.zero(&format!("closed I{i}: d/d{v} matches dI{i}"), &r));
            }
            let pot = Potential::new(form.clone(), p.sbox.clone(), p.base, ctx.o.quad_tol);
            ctx.potential_vs_closed(&mut sec, &format!("I{i}"), &pot, &c.expr, c.scale);
        }
    }
    sec.checks.push(independence(ctx, di1, di2));
    sec.checks
        .push(ctx.zero("JLM divergence", &quad::jlm_divergence(&m, &d.phi)));
    let i1_ux = di1.get(Var::Ux).cloned().unwrap_or_else(Expr::zero);
    sec.checks.push(ctx.zero(
        "M/(I1)_ux - 1/(f1*g1)",
        &(&m / &i1_ux - Expr::one() / &d.h1),
    ));
    if let Some(c) = &p.closed.i1 {
        let ux = Expr::float(c.scale) * c.expr.diff(Var::Ux);
        sec.checks.push(ctx.zero(
            "M/(closed I1)_ux - 1/(f1*g1)",
            &(&m / ux - Expr::one() / &d.h1),
        ));
    }
    if let Some(c) = &p.closed.m {
        sec.checks
            .push(ctx.zero("M matches closed form", &(&m - c)));
    }
    sec.notes.push(format!("mu1 = {mu1}"));
    sec.notes.push(format!("mu2 = {mu2}"));
    sec.notes.push(format!("M = {m}"));
    sec
}

/// Share of sampled points where `dI1 ∧ dI2` is bounded away from zero.
fn independence(ctx: &Ctx, di1: &OneForm, di2: &OneForm) -> Check {
    const NAME: &str = "dI1, dI2 functionally independent";
    let envs = match ctx.p.sbox.points(ctx.s().samples, ctx.s().seed) {
        Ok(e) => e,
        Err(e) => return Check::failed(NAME, e.to_string()),
    };
    let mut good = 0;
    for env in &envs {
        let comps = |f: &OneForm| -> Option<[f64; 3]> {
            let mut out = [0.0; 3];
            for (slot, v) in out.iter_mut().zip(Var::JET) {
                *slot = match f.get(v) {
                    Some(c) => c.eval(env).ok()?,
                    None => 0.0,
                };
            }
            Some(out)
        };
        if let (Some(a), Some(b)) = (comps(di1), comps(di2)) {
            let minors = [
                a[0] * b[1] - a[1] * b[0],
                a[0] * b[2] - a[2] * b[0],
                a[1] * b[2] - a[2] * b[1],
            ];
            let norm = |v: &[f64; 3]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let largest = minors.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if largest > 1e-6 * norm(&a) * norm(&b) {
                good += 1;
            }
        }
    }
    let share = good as f64 / envs.len() as f64;
    Check::bound(NAME, 1.0 - share, 0.05).with_value(share)
}

fn lateral(ctx: &Ctx, d: &CommutingData) -> Section {
    let p = ctx.p;
    let mut sec = Section::new("reduced-and-auxiliary-factors");
    if let (Some(g1r), Some(g2r)) = (&p.closed.g1_reduced, &p.closed.g2_reduced) {
        let (nu1, nu2) = quad::reduced_integrating_factors(g1r, g2r);
        let x = p.sbox.range(Var::X).unwrap_or(Interval::new(0.0, 1.0));
        for (i, nu, phi_i, g) in [
            (1, &nu1, &p.closed.phi1, g2r),
            (2, &nu2, &p.closed.phi2, g1r),
        ] {
            let Some(phi_i) = phi_i else { continue };
            let wbox = SampleBox::new(vec![(Var::X, x), (Var::W, Interval::new(-2.0, 2.0))])
                .excluding(g.clone());
            sec.checks.push(ctx.zero_in(
                &format!("nu{i} solves the factor equation of reduced equation {i}"),
                &quad::reduced_factor_residual(nu, phi_i),
                &wbox,
            ));
            sec.notes.push(format!("nu{i} = {nu}"));
        }
    }
    for (k, aux) in p.closed.auxiliary.iter().enumerate() {
        let i = aux.index;
        let tag = format!("auxiliary {k} (ux = H{i}, C = {})", aux.c);
        let nu = quad::auxiliary_factor(d, &aux.h, i);
        let lambda = if i == 1 { &d.lambda1 } else { &d.lambda2 };
        let h_i = if i == 1 { &d.h1 } else { &d.h2 };
        let abox = aux.sbox.clone().excluding(h_i.subst(Var::Ux, &aux.h));
        let r = quad::auxiliary_relation_residuals(&aux.h, lambda, &d.phi, &nu);
        sec.checks.push(ctx.zero_in(
            &format!("{tag}: H_u - lambda{i}(H)"),
            &r.lambda_relation,
            &abox,
        ));
        sec.checks.push(ctx.zero_in(
            &format!("{tag}: H_x + H*H_u - phi(H)"),
            &r.ode_relation,
            &abox,
        ));
        sec.checks.push(ctx.zero_in(
            &format!("{tag}: factor equation for nu~{i}"),
            &r.factor_pde,
            &abox,
        ));
        if let Some(reference) = &aux.nu {
            sec.checks.push(ctx.zero_in(
                &format!("{tag}: nu~{i} matches closed form"),
                &(&nu - reference),
                &abox,
            ));
        }
    }
    sec
}

fn integrate_all(ctx: &Ctx, report: &mut Report) -> Vec<(TrajectorySpec, Trajectory)> {
    let mut out = Vec::new();
    let mut failures = Section::new("integration");
    for (k, t) in ctx.p.trajectories.iter().enumerate() {
        let [x0, u0, ux0] = t.ic;
        match integrate_ode2(&ctx.p.phi, x0, u0, ux0, t.x_end, ctx.o.integrate_tol) {
            Ok(traj) => out.push((t.clone(), traj)),
            Err(e) => failures
                .checks
                .push(Check::failed(format!("trajectory {k}"), e.to_string())),
        }
    }
    if !failures.checks.is_empty() {
        report.sections.push(failures);
    }
    out
}

fn drift_checks(ctx: &Ctx, sec: &mut Section, tag: &str, traj: &Trajectory, forms: [&OneForm; 2]) {
    let p = ctx.p;
    let closed = [p.closed.i1.as_ref(), p.closed.i2.as_ref()];
    for (k, form) in forms.into_iter().enumerate() {
        let i = k + 1;
        let name = format!("{tag}: drift of I{i} (quadrature)");
        match form_drift(form, traj, p.loci(), ctx.o.quad_tol) {
            Ok(r) => sec.checks.push(
                Check::bound(name, r.drift, ctx.o.drift_tol)
                    .with_value(r.samples_used as f64)
                    .with_note(format!(
                        "{} run(s), {} of {} samples",
                        r.runs, r.samples_used, r.samples
                    )),
            ),
            Err(e) => sec.checks.push(Check::failed(name, e.to_string())),
        }
        if let Some(c) = closed[k] {
            let name = format!("{tag}: drift of closed-form I{i}");
            match drift_by_runs(&c.expr, traj, p.loci()) {
                Ok(r) => sec
                    .checks
                    .push(
                        Check::bound(name, r.drift, ctx.o.drift_tol).with_note(format!(
                            "{} run(s), {} of {} samples",
                            r.runs, r.samples_used, r.samples
                        )),
                    ),
                Err(e) => sec.notes.push(format!("{name}: not evaluated, {e}")),
            }
        }
    }
}

fn solutions(ctx: &Ctx) -> Section {
    let mut sec = Section::new("solutions");
    for sol in &ctx.p.closed.solutions {
        let s = &sol.solution;
        let name = format!("{}: residual of u'' - phi", sol.label);
        match check_closed_form(s, &ctx.p.phi) {
            Ok(r) => sec.checks.push(Check::bound(name, r, ctx.s().tol)),
            Err(e) => sec.checks.push(Check::failed(name, e.to_string())),
        }
        let name = format!("{}: integrated endpoint matches", sol.label);
        let r = (|| -> Result<(f64, f64), String> {
            let start = s.point_at(s.interval.lo).map_err(|e| e.to_string())?;
            let end = s.point_at(s.interval.hi).map_err(|e| e.to_string())?;
            let traj = integrate_ode2(
                &ctx.p.phi,
                start.x,
                start.u,
                start.ux,
                s.interval.hi,
                ctx.o.solution_integrate_tol,
            )
            .map_err(|e| e.to_string())?;
            Ok((traj.last_state()[0], end.u))
        })();
        match r {
            Ok((num, exact)) => sec.checks.push(
                Check::bound(name, (num - exact).abs(), ctx.o.endpoint_tol)
                    .with_value(num)
                    .with_note(format!("closed form u = {}", fmt_f(exact))),
            ),
            Err(e) => sec.checks.push(Check::failed(name, e)),
        }
    }
    sec
}

/// Integrates each initial condition and reports drifts of the computed
/// first integrals, plus closed-form agreement where a catalog solution
/// passes through the initial point.
pub fn verify_trajectories(p: &Problem, ics: &[(Point, f64)], o: &RunOptions) -> Report {
    let mut report = Report::new(&p.name, o);
    let ctx = Ctx { p, o };
    if ics.is_empty() {
        return report.finish();
    }
    let forms = (|| -> Result<(OneForm, OneForm), String> {
        let input = SymmetryInput {
            phi: p.phi.clone(),
            lambda1: p.lambda1.clone(),
            lambda2: p.lambda2.clone(),
            f1: p.f1.clone(),
            f2: p.f2.clone(),
            g1: p.g1.clone().ok_or("g1 not supplied")?,
            g2: p.g2.clone().ok_or("g2 not supplied")?,
        };
        let outcome = build_commuting(&input, &p.sbox, &o.sampling).map_err(|e| e.to_string())?;
        Ok(quad::i_forms(&outcome.data))
    })();
    let (di1, di2) = match forms {
        Ok(f) => f,
        Err(e) => {
            report.error = Some(e);
            return report.finish();
        }
    };
    for (k, (ic, x_end)) in ics.iter().enumerate() {
        let tag = format!("ic {k} ({}, {}, {})", ic.x, ic.u, ic.ux);
        let mut sec = Section::new(&tag);
        let env = Env::from(*ic);
        if p.loci()
            .iter()
            .any(|e| e.eval(&env).map_or(true, |v| v.abs() < LOCUS_MARGIN))
        {
            sec.checks.push(Check::failed(
                "initial condition admissible",
                "inadmissible: the initial point lies on an excluded locus",
            ));
            report.sections.push(sec);
            continue;
        }
        let traj = match integrate_ode2(&p.phi, ic.x, ic.u, ic.ux, *x_end, o.integrate_tol) {
            Ok(t) => t,
            Err(e) => {
                sec.checks.push(Check::failed("integration", e.to_string()));
                report.sections.push(sec);
                continue;
            }
        };
        sec.notes.push(format!(
            "{} steps, {} rejected",
            traj.stats.steps, traj.stats.rejected
        ));
        drift_checks(&ctx, &mut sec, "trajectory", &traj, [&di1, &di2]);
        for sol in &p.closed.solutions {
            let s = &sol.solution;
            let through = s
                .point_at(ic.x)
                .is_ok_and(|q| (q.u - ic.u).abs() < 1e-8 && (q.ux - ic.ux).abs() < 1e-8);
            if !through {
                continue;
            }
            let name = format!("{}: matches trajectory", sol.label);
            let mut worst: f64 = 0.0;
            let mut error = None;
            for j in 0..=20 {
                let x = ic.x + (x_end - ic.x) * j as f64 / 20.0;
                if !s.interval.contains(x) {
                    continue;
                }
                match (s.point_at(x), traj.state_at(x)) {
                    (Ok(q), Some(st)) => worst = worst.max((q.u - st[0]).abs()),
                    (Err(e), _) => error = Some(e.to_string()),
                    _ => {}
                }
            }
            sec.checks.push(match error {
                Some(e) => Check::failed(name, e),
                None => Check::bound(name, worst, o.endpoint_tol),
            });
        }
        report.sections.push(sec);
    }
    report.finish()
}
