//! Acceptance criteria 1 to 10. Each criterion prints one PASS/FAIL line;
//! the target exits nonzero if any criterion fails. It runs without the
//! libtest harness so the lines are always printed.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use lambda_quad::catalog::{self, Problem};
use lambda_quad::check::Sampling;
use lambda_quad::commute::{build_commuting, rho_i, CommutingData, SymmetryInput};
use lambda_quad::expr::{Expr, Var};
use lambda_quad::jetfield::LambdaPair;
use lambda_quad::numverify::{
    check_closed_form, drift_by_runs, form_drift, integrate_ode2, reduction_residual, Trajectory,
};
use lambda_quad::quad::{self, OneForm, Potential, QUAD_TOL};
use lambda_quad::sample::{is_zero_sampled, Interval, Point, SampleBox};
use lambda_quad::symcheck::{are_equivalent, determining_residual};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SEED: u64 = 1729;

fn problem(name: &str) -> Result<Problem, String> {
    catalog::get_problem(name).map_err(|e| format!("{name}: {e}"))
}

fn sampling(tol: f64) -> Sampling {
    Sampling {
        samples: 200,
        tol,
        seed: SEED,
    }
}

fn commuting(
    p: &Problem,
    tol: f64,
) -> Result<(CommutingData, Vec<lambda_quad::check::Check>), String> {
    let input = SymmetryInput {
        phi: p.phi.clone(),
        lambda1: p.lambda1.clone(),
        lambda2: p.lambda2.clone(),
        f1: p.f1.clone(),
        f2: p.f2.clone(),
        g1: p.g1.clone().ok_or("no g1")?,
        g2: p.g2.clone().ok_or("no g2")?,
    };
    let out =
        build_commuting(&input, &p.sbox, &sampling(tol)).map_err(|e| format!("{}: {e}", p.name))?;
    Ok((out.data, out.brackets))
}

fn zero(label: &str, e: &Expr, sbox: &SampleBox, tol: f64) -> Result<f64, String> {
    let t = is_zero_sampled(e, sbox, 200, tol, SEED).map_err(|err| format!("{label}: {err}"))?;
    if t.passed {
        Ok(t.max_relative)
    } else {
        Err(format!(
            "{label}: relative residual {:e} > {tol:e}",
            t.max_relative
        ))
    }
}

fn trajectories(p: &Problem) -> Result<Vec<Trajectory>, String> {
    p.trajectories
        .iter()
        .map(|t| {
            integrate_ode2(&p.phi, t.ic[0], t.ic[1], t.ic[2], t.x_end, 1e-10)
                .map_err(|e| format!("{}: {e}", p.name))
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let names = [
        "pg27_general(0)",
        "pg27_general(sin(x))",
        "pg27_general(2*x + 1)",
        "pg27_general(x^2 - 3)",
        "pg27_general(exp(-x))",
        "example9",
    ];
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for name in names {
        let p = problem(name)?;
        let start = Instant::now();
        for (k, lambda) in [&p.lambda1, &p.lambda2].into_iter().enumerate() {
            let r = determining_residual(lambda, &p.phi);
            worst = worst.max(zero(&format!("{name} lambda{}", k + 1), &r, &p.sbox, 1e-9)?);
        }
        let elapsed = start.elapsed();
        slowest = slowest.max(elapsed);
        if elapsed > Duration::from_secs(1) {
            return Err(format!("{name} took {elapsed:?}"));
        }
    }
    Ok(format!(
        "{} problems, worst relative residual {worst:e}, slowest {slowest:?}",
        names.len()
    ))
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for (name, _) in catalog::list() {
        let p = problem(name)?;
        let start = Instant::now();
        let (_, brackets) = commuting(&p, 1e-8)?;
        let elapsed = start.elapsed();
        if brackets.len() != 6 {
            return Err(format!("{name}: {} bracket checks", brackets.len()));
        }
        for c in &brackets {
            if !c.passed {
                return Err(format!("{name}: {} residual {:e}", c.name, c.residual));
            }
            worst = worst.max(c.residual);
        }
        slowest = slowest.max(elapsed);
        if elapsed > Duration::from_secs(5) {
            return Err(format!("{name} took {elapsed:?}"));
        }
    }
    Ok(format!(
        "all catalog problems, worst residual {worst:e}, slowest {slowest:?}"
    ))
}

/// Standard deviation over 50 admissible points of `potential - scale*closed`.
fn potential_spread(p: &Problem, form: &OneForm, closed: &Expr, scale: f64) -> Result<f64, String> {
    let pot = Potential::new(form.clone(), p.sbox.clone(), p.base, QUAD_TOL);
    let envs = p.sbox.points(50, SEED).map_err(|e| e.to_string())?;
    let mut diffs = Vec::new();
    for env in envs {
        let pt = Point::new(
            env.get(Var::X).unwrap(),
            env.get(Var::U).unwrap(),
            env.get(Var::Ux).unwrap(),
        );
        let v = pot.at(pt).map_err(|e| e.to_string())?;
        let c = closed.eval(&env).map_err(|e| e.to_string())?;
        diffs.push(v - scale * c);
    }
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    Ok((diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n).sqrt())
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    for name in ["pg27_f0", "example9"] {
        let p = problem(name)?;
        let (d, _) = commuting(&p, 1e-9)?;
        let (dw1, dw2) = quad::w_forms(&d);
        let (di1, di2) = quad::i_forms(&d);
        let c = &p.closed;
        let need = |e: Option<&Expr>, l: &str| e.cloned().ok_or(format!("{name}: no closed {l}"));
        let i1 = c.i1.as_ref().ok_or("no I1")?;
        let i2 = c.i2.as_ref().ok_or("no I2")?;
        let cases = [
            ("w1", &dw1, need(c.w1.as_ref(), "w1")?, 1.0),
            ("w2", &dw2, need(c.w2.as_ref(), "w2")?, 1.0),
            ("I1", &di1, i1.expr.clone(), i1.scale),
            ("I2", &di2, i2.expr.clone(), i2.scale),
        ];
        for (label, form, closed, scale) in cases {
            let sd = potential_spread(&p, form, &closed, scale)?;
            if sd > 1e-7 {
                return Err(format!("{name} {label}: spread {sd:e}"));
            }
            worst = worst.max(sd);
        }
    }
    Ok(format!(
        "pg27_f0 and example9, w1 w2 I1 I2, worst spread {worst:e}"
    ))
}

fn criterion_4() -> Outcome {
    let mut worst: f64 = 0.0;
    for name in ["pg27_f0", "pg27_airy", "example9"] {
        let p = problem(name)?;
        let (d, _) = commuting(&p, 1e-9)?;
        let (di1, di2) = quad::i_forms(&d);
        let trajs = trajectories(&p)?;
        if trajs.is_empty() {
            return Err(format!("{name}: no trajectory"));
        }
        for traj in &trajs {
            for (label, form) in [("I1", &di1), ("I2", &di2)] {
                let r = form_drift(form, traj, p.loci(), QUAD_TOL)
                    .map_err(|e| format!("{name} {label}: {e}"))?;
                if r.drift > 1e-6 || r.samples_used < r.samples / 2 {
                    return Err(format!(
                        "{name} {label}: drift {:e} over {} of {} samples",
                        r.drift, r.samples_used, r.samples
                    ));
                }
                worst = worst.max(r.drift);
            }
        }
    }
    // Independent of the quadrature: the closed-form I2 of pg27_f0 is real along its trajectory.
    let p = problem("pg27_f0")?;
    let traj = &trajectories(&p)?[0];
    let closed = drift_by_runs(&p.closed.i2.as_ref().unwrap().expr, traj, p.loci())
        .map_err(|e| e.to_string())?;
    if closed.drift > 1e-6 {
        return Err(format!("pg27_f0 closed I2 drift {:e}", closed.drift));
    }
    Ok(format!(
        "worst quadrature drift {worst:e}, closed-form I2 drift on pg27_f0 {:e}",
        closed.drift
    ))
}

/// Fixed-step RK4 on a hand-coded right-hand side, independent of the
/// expression kernel and the adaptive integrator.
fn rk4(
    f: impl Fn(f64, f64, f64) -> f64,
    (x0, u0, ux0): (f64, f64, f64),
    x1: f64,
    steps: usize,
) -> f64 {
    let h = (x1 - x0) / steps as f64;
    let (mut x, mut u, mut v) = (x0, u0, ux0);
    for _ in 0..steps {
        let (k1u, k1v) = (v, f(x, u, v));
        let (k2u, k2v) = (
            v + 0.5 * h * k1v,
            f(x + 0.5 * h, u + 0.5 * h * k1u, v + 0.5 * h * k1v),
        );
        let (k3u, k3v) = (
            v + 0.5 * h * k2v,
            f(x + 0.5 * h, u + 0.5 * h * k2u, v + 0.5 * h * k2v),
        );
        let (k4u, k4v) = (v + h * k3v, f(x + h, u + h * k3u, v + h * k3v));
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        x += h;
    }
    u
}

fn criterion_5() -> Outcome {
    let mut lines = Vec::new();
    for (name, label, tol) in [
        ("pg27_f0", "tanh branch", 1e-10),
        // The solution meets a branch point of the equation at u = 0,
        // ux = -1; the continuation past it needs a tighter tolerance.
        ("example9", "general solution", 1e-13),
    ] {
        let p = problem(name)?;
        let sol = &p
            .closed
            .solutions
            .iter()
            .find(|s| s.label == label)
            .ok_or(label)?
            .solution;
        let residual = check_closed_form(sol, &p.phi).map_err(|e| e.to_string())?;
        if residual > 1e-9 {
            return Err(format!("{name}: closed-form residual {residual:e}"));
        }
        let (lo, hi) = (sol.interval.lo, sol.interval.hi);
        let a = sol.point_at(lo).map_err(|e| e.to_string())?;
        let b = sol.point_at(hi).map_err(|e| e.to_string())?;
        let traj = integrate_ode2(&p.phi, a.x, a.u, a.ux, hi, tol).map_err(|e| e.to_string())?;
        let gap = (traj.last_state()[0] - b.u).abs();
        if gap > 1e-6 {
            return Err(format!("{name}: endpoint gap {gap:e}"));
        }
        lines.push(format!("{name} residual {residual:e} endpoint gap {gap:e}"));
    }
    // The coth member through (0, 1, 0) of pg27_f0 against a fixed-step RK4 on
    // the same initial data.
    let phi0 = |_x: f64, u: f64, v: f64| {
        v * v / (2.0 * u) - 2.0 * u * v - u.powi(3) / 2.0 - 1.0 / (2.0 * u)
    };
    let oracle = rk4(phi0, (0.0, 1.0, 0.0), 0.5, 4000);
    let p = problem("pg27_f0")?;
    let coth = &p
        .closed
        .solutions
        .iter()
        .find(|s| s.label.starts_with("coth"))
        .ok_or("coth")?
        .solution;
    let closed = coth.point_at(0.5).map_err(|e| e.to_string())?.u;
    if (closed - oracle).abs() > 1e-9 || (closed - 0.91011106586623).abs() > 1e-12 {
        return Err(format!("coth branch u(0.5) = {closed}, RK4 {oracle}"));
    }
    lines.push(format!("coth u(0.5) = {closed:.14} vs RK4 {oracle:.14}"));
    Ok(lines.join("; "))
}

fn criterion_6() -> Outcome {
    let mut worst_div: f64 = 0.0;
    for (name, _) in catalog::list() {
        let p = problem(name)?;
        let (d, _) = commuting(&p, 1e-9)?;
        let (mu1, mu2) = quad::integrating_factors(&d);
        let (di1, di2) = quad::i_forms(&d);
        for (i, form, mu, lambda) in [(1, &di1, &mu1, &d.lambda1), (2, &di2, &mu2, &d.lambda2)] {
            let get = |v: Var| form.get(v).cloned().unwrap_or_else(Expr::zero);
            let ids = [
                get(Var::X) - mu * (lambda * Expr::ux() - &d.phi),
                get(Var::U) + lambda * mu,
                get(Var::Ux) - mu,
            ];
            for (k, r) in ids.iter().enumerate() {
                zero(&format!("{name} mu{i} identity {k}"), r, &p.sbox, 1e-8)?;
            }
        }
        let m = quad::jacobi_last_multiplier(&d);
        worst_div = worst_div.max(zero(
            &format!("{name} JLM"),
            &quad::jlm_divergence(&m, &d.phi),
            &p.sbox,
            1e-9,
        )?);
        let cross = &m / &mu1 - Expr::one() / &d.h1;
        zero(&format!("{name} cross identity"), &cross, &p.sbox, 1e-9)?;
        // Against the closed-form I1 where one is catalogued.
        if let Some(i1) = &p.closed.i1 {
            let ux = Expr::float(i1.scale) * i1.expr.diff(Var::Ux);
            zero(
                &format!("{name} cross identity, closed I1"),
                &(&m / ux - Expr::one() / &d.h1),
                &p.sbox,
                1e-9,
            )?;
        }
    }
    Ok(format!(
        "all catalog problems, worst JLM divergence {worst_div:e}"
    ))
}

fn criterion_7() -> Outcome {
    let mut count = 0;
    for (name, _) in catalog::list() {
        let p = problem(name)?;
        let c = &p.closed;
        let (Some(g1r), Some(g2r)) = (&c.g1_reduced, &c.g2_reduced) else {
            continue;
        };
        let (nu1, nu2) = quad::reduced_integrating_factors(g1r, g2r);
        for (i, nu, phi_i, g) in [(1, &nu1, &c.phi1, g2r), (2, &nu2, &c.phi2, g1r)] {
            let phi_i = phi_i.as_ref().ok_or("no reduced equation")?;
            let wbox = SampleBox::new(vec![
                (Var::X, Interval::new(0.0, 1.0)),
                (Var::W, Interval::new(-2.0, 2.0)),
            ])
            .excluding(g.clone());
            zero(
                &format!("{name} nu{i}"),
                &quad::reduced_factor_residual(nu, phi_i),
                &wbox,
                1e-8,
            )?;
            count += 1;
        }
    }
    // The auxiliary equation of the family member with numerical bases.
    let p = problem("pg27_general")?;
    let (d, _) = commuting(&p, 1e-9)?;
    let aux = p
        .closed
        .auxiliary
        .iter()
        .find(|a| a.index == 1 && a.c == 0.3)
        .ok_or("no auxiliary H1")?;
    let nu = quad::auxiliary_factor(&d, &aux.h, 1);
    let abox = aux.sbox.clone().excluding(d.h1.subst(Var::Ux, &aux.h));
    let r = quad::auxiliary_relation_residuals(&aux.h, &d.lambda1, &d.phi, &nu);
    let worst = zero("auxiliary factor", &r.factor_pde, &abox, 1e-8)?;
    zero(
        "auxiliary H1 solves the equation",
        &r.ode_relation,
        &abox,
        1e-8,
    )?;
    Ok(format!(
        "{count} reduced factors; pg27_general auxiliary factor residual {worst:e}"
    ))
}

fn criterion_8() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (name, _) in catalog::list() {
        let p = problem(name)?;
        let c = &p.closed;
        for traj in trajectories(&p)? {
            for (w, phi_i) in [(&c.w1, &c.phi1), (&c.w2, &c.phi2)] {
                let (Some(w), Some(phi_i)) = (w, phi_i) else {
                    continue;
                };
                let r = reduction_residual(w, phi_i, &traj, p.loci())
                    .map_err(|e| format!("{name}: {e}"))?;
                if r.residual > 1e-5 || r.points == 0 {
                    return Err(format!(
                        "{name}: residual {:e} at {} points",
                        r.residual, r.points
                    ));
                }
                worst = worst.max(r.residual);
                checked += 1;
            }
        }
    }
    Ok(format!(
        "{checked} trajectory/invariant pairs, worst residual {worst:e}"
    ))
}

fn criterion_9() -> Outcome {
    let mut lines = Vec::new();
    for name in ["pg27_f0", "pg27_general"] {
        let p = problem(name)?;
        let u2 = Expr::u().powi(2);
        let rho1 = rho_i(&p.lambda1, &u2, &p.phi);
        let base = LambdaPair::canonical(p.lambda1.clone());
        let scaled = LambdaPair::new(Expr::zero(), u2, rho1);
        let other = LambdaPair::canonical(p.lambda2.clone());
        let eq = are_equivalent(&base, &scaled, &p.phi, &p.sbox, 200, 1e-9, SEED)
            .map_err(|e| e.to_string())?;
        let ne = are_equivalent(&base, &other, &p.phi, &p.sbox, 200, 1e-9, SEED)
            .map_err(|e| e.to_string())?;
        if !eq.equivalent || ne.equivalent {
            return Err(format!(
                "{name}: scaled pair equivalent = {}, lambda2 pair equivalent = {}",
                eq.equivalent, ne.equivalent
            ));
        }
        lines.push(format!("{name} ok"));
    }
    Ok(lines.join(", "))
}

fn criterion_10() -> Outcome {
    let run = || -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_lambda-quad"))
            .args([
                "run",
                "pg27_f0",
                "--tol",
                "1e-9",
                "--samples",
                "200",
                "--seed",
                "1729",
            ])
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!(
                "exit {:?}: {}",
                out.status.code(),
                String::from_utf8_lossy(&out.stderr)
            ));
        }
        Ok(out.stdout)
    };
    let (a, b) = (run()?, run()?);
    if a != b {
        return Err("reports differ".into());
    }
    Ok(format!("two runs, {} identical bytes, exit 0", a.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("determining equations", criterion_1),
        ("bracket algebra", criterion_2),
        ("quadrature vs closed form", criterion_3),
        ("conservation", criterion_4),
        ("general solutions", criterion_5),
        ("integrating factors and JLM", criterion_6),
        ("reduced and auxiliary factors", criterion_7),
        ("reduction consistency", criterion_8),
        ("equivalence classification", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = Vec::new();
    for (k, (title, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {} PASS: {title}: {detail}", k + 1),
            Err(why) => {
                println!("criterion {} FAIL: {title}: {why}", k + 1);
                failed.push(k + 1);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
