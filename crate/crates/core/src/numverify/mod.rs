//! Trajectory-level certification: numerical integration of the equations and
//! conservation / closed-form checks along the computed solutions.

mod dopri;

use std::io::{self, Write};
use std::ops::Range;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{Env, EvalError, Expr, Var};
use crate::quad::{line_integral, OneForm, QuadError};
use crate::sample::{Interval, Point, LOCUS_MARGIN};

pub use dopri::DenseStep;

pub const MIN_TOL: f64 = 1e-13;
pub const MAX_TOL: f64 = 1e-4;
pub const DEFAULT_BOUND: f64 = 1e8;
const MAX_STEPS: usize = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrateError {
    #[error("tolerance {0:e} outside [1e-13, 1e-4]")]
    Tolerance(f64),
    #[error("right-hand side cannot be evaluated at the initial point x = {x}")]
    Inadmissible { x: f64 },
    #[error("step size collapsed near x = {x}; singularity approached")]
    Singularity { x: f64 },
    #[error("solution exceeded the blow-up bound at x = {x}")]
    BlowUp { x: f64 },
    #[error("step budget exhausted at x = {x}")]
    TooManySteps { x: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    pub max_local_error: f64,
}

/// Accepted steps of an integration with dense output between them.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub state_vars: Vec<Var>,
    pub xs: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub steps: Vec<DenseStep>,
    pub stats: IntegratorStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    fn direction(&self) -> f64 {
        match self.steps.first() {
            Some(s) => s.h.signum(),
            None => 1.0,
        }
    }

    fn step_for(&self, x: f64) -> Option<&DenseStep> {
        let dir = self.direction();
        let (first, last) = (self.xs[0], *self.xs.last()?);
        if (x - first) * dir < 0.0 || (x - last) * dir > 0.0 {
            return None;
        }
        let idx = self.steps.partition_point(|s| (s.x - x) * dir <= 0.0);
        self.steps.get(idx.saturating_sub(1))
    }

    /// Interpolated state at `x`; `None` outside the integrated range.
    pub fn state_at(&self, x: f64) -> Option<Vec<f64>> {
        if self.steps.is_empty() {
            return (x == self.xs[0]).then(|| self.states[0].clone());
        }
        let s = self.step_for(x)?;
        Some((0..self.state_vars.len()).map(|i| s.value(x, i)).collect())
    }

    /// Derivative of the dense-output interpolant at `x`.
    pub fn derivative_at(&self, x: f64) -> Option<Vec<f64>> {
        let s = self.step_for(x)?;
        Some(
            (0..self.state_vars.len())
                .map(|i| s.derivative(x, i))
                .collect(),
        )
    }

    fn env(&self, x: f64, state: &[f64]) -> Env {
        let mut env = Env::new().with(Var::X, x);
        for (v, val) in self.state_vars.iter().zip(state) {
            env.set(*v, *val);
        }
        env
    }

    pub fn sample_env(&self, k: usize) -> Env {
        self.env(self.xs[k], &self.states[k])
    }

    pub fn env_at(&self, x: f64) -> Option<Env> {
        self.state_at(x).map(|s| self.env(x, &s))
    }

    /// Jet point of sample `k` (second-order trajectories).
    pub fn point(&self, k: usize) -> Point {
        let env = self.sample_env(k);
        Point::new(
            self.xs[k],
            env.get(Var::U).unwrap_or(f64::NAN),
            env.get(Var::Ux).unwrap_or(f64::NAN),
        )
    }

    pub fn last_state(&self) -> &[f64] {
        self.states
            .last()
            .expect("trajectory has its initial sample")
    }

    /// CSV with a header row `x,<state vars>`.
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        let header: Vec<&str> = std::iter::once("x")
            .chain(self.state_vars.iter().map(|v| v.name()))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for (x, s) in self.xs.iter().zip(&self.states) {
            write!(out, "{x:?}")?;
            for v in s {
                write!(out, ",{v:?}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn settings(tol: f64) -> Result<dopri::Settings, IntegrateError> {
    if !(MIN_TOL..=MAX_TOL).contains(&tol) {
        return Err(IntegrateError::Tolerance(tol));
    }
    Ok(dopri::Settings {
        tol,
        bound: DEFAULT_BOUND,
        max_steps: MAX_STEPS,
    })
}

/// Solves `u'' = phi(x, u, u')` from `(x0, u0, ux0)` to `x_end`.
pub fn integrate_ode2(
    phi: &Expr,
    x0: f64,
    u0: f64,
    ux0: f64,
    x_end: f64,
    tol: f64,
) -> Result<Trajectory, IntegrateError> {
    let set = settings(tol)?;
    let rhs = |x: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = phi.eval(&Env::jet(x, y[0], y[1])).ok()?;
        Some(())
    };
    let sol = dopri::integrate(rhs, x0, &[u0, ux0], x_end, &set)?;
    Ok(Trajectory {
        state_vars: vec![Var::U, Var::Ux],
        xs: sol.xs,
        states: sol.states,
        steps: sol.steps,
        stats: sol.stats,
    })
}

/// Solves `w' = rhs(x, w)` from `(x0, w0)` to `x_end`.
pub fn integrate_ode1(
    rhs: &Expr,
    x0: f64,
    w0: f64,
    x_end: f64,
    tol: f64,
) -> Result<Trajectory, IntegrateError> {
    let set = settings(tol)?;
    let f = |x: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = rhs
            .eval(&Env::new().with(Var::X, x).with(Var::W, y[0]))
            .ok()?;
        Some(())
    };
    let sol = dopri::integrate(f, x0, &[w0], x_end, &set)?;
    Ok(Trajectory {
        state_vars: vec![Var::W],
        xs: sol.xs,
        states: sol.states,
        steps: sol.steps,
        stats: sol.stats,
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriftError {
    #[error("first integral not evaluable at trajectory sample x = {x}: {source}")]
    Inadmissible { x: f64, source: EvalError },
    #[error("quadrature along the trajectory failed near x = {x}: {source}")]
    Quadrature { x: f64, source: QuadError },
}

/// `max_k |I(p_k) - I(p_0)| / (1 + |I(p_0)|)` over the samples of `traj`.
pub fn first_integral_drift(i: &Expr, traj: &Trajectory) -> Result<f64, DriftError> {
    drift_over(i, traj, 0..traj.len())
}

fn drift_over(i: &Expr, traj: &Trajectory, range: Range<usize>) -> Result<f64, DriftError> {
    let value = |k: usize| {
        i.eval(&traj.sample_env(k))
            .map_err(|source| DriftError::Inadmissible {
                x: traj.xs[k],
                source,
            })
    };
    let i0 = value(range.start)?;
    let mut drift: f64 = 0.0;
    for k in range {
        drift = drift.max((value(k)? - i0).abs() / (1.0 + i0.abs()));
    }
    Ok(drift)
}

/// Drift measured separately on each maximal run of samples that keeps a
/// fixed sign on every excluded locus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub drift: f64,
    pub runs: usize,
    pub samples_used: usize,
    pub samples: usize,
}

/// Splits sample indices into runs along which every `excluded` expression
/// stays at least `LOCUS_MARGIN` away from zero with a constant sign.
/// Runs with fewer than two samples are dropped.
pub fn admissible_runs(traj: &Trajectory, excluded: &[Expr]) -> Vec<Range<usize>> {
    let signature = |k: usize| -> Option<Vec<bool>> {
        let env = traj.sample_env(k);
        excluded
            .iter()
            .map(|e| match e.eval(&env) {
                Ok(v) if v.abs() >= LOCUS_MARGIN => Some(v > 0.0),
                _ => None,
            })
            .collect()
    };
    let mut runs = Vec::new();
    let mut start: Option<(usize, Vec<bool>)> = None;
    for k in 0..traj.len() {
        let sig = signature(k);
        let continues = matches!((&start, &sig), (Some((_, a)), Some(b)) if a == b);
        if !continues {
            if let Some((s, _)) = start.take() {
                if k - s >= 2 {
                    runs.push(s..k);
                }
            }
            start = sig.map(|sig| (k, sig));
        }
    }
    if let Some((s, _)) = start {
        if traj.len() - s >= 2 {
            runs.push(s..traj.len());
        }
    }
    runs
}

/// Drift of a closed-form first integral, per admissible run.
pub fn drift_by_runs(
    i: &Expr,
    traj: &Trajectory,
    excluded: &[Expr],
) -> Result<DriftReport, DriftError> {
    let runs = admissible_runs(traj, excluded);
    let mut drift: f64 = 0.0;
    let mut used = 0;
    for r in &runs {
        used += r.len();
        drift = drift.max(drift_over(i, traj, r.clone())?);
    }
    Ok(DriftReport {
        drift,
        runs: runs.len(),
        samples_used: used,
        samples: traj.len(),
    })
}

/// Drift of the potential of an exact form along a second-order trajectory.
///
/// The potential is accumulated by integrating the form along the chords
/// between consecutive samples, with the gauge `I = 0` at the start of each
/// run, so the reported drift is `max |I(p_k) - I(p_start)|`.
pub fn form_drift(
    form: &OneForm,
    traj: &Trajectory,
    excluded: &[Expr],
    quad_tol: f64,
) -> Result<DriftReport, DriftError> {
    let runs = admissible_runs(traj, excluded);
    let mut drift: f64 = 0.0;
    let mut used = 0;
    for r in &runs {
        used += r.len();
        let mut acc = 0.0;
        for k in r.start + 1..r.end {
            let seg = [traj.point(k - 1), traj.point(k)];
            let q =
                line_integral(form, &seg, quad_tol).map_err(|source| DriftError::Quadrature {
                    x: traj.xs[k],
                    source,
                })?;
            acc += q.value;
            drift = drift.max(acc.abs());
        }
    }
    Ok(DriftReport {
        drift,
        runs: runs.len(),
        samples_used: used,
        samples: traj.len(),
    })
}

/// Largest `|d/dx w(traj) - phi_w(x, w(traj))|` at the step midpoints of a
/// second-order trajectory, with `u'` and `u''` from the dense-output
/// interpolant. Each residual is scaled by `1 + |phi_w|` plus the magnitudes
/// of the three terms of the chain rule, since interpolation error enters
/// through them. Midpoints near an excluded locus are skipped.
pub fn reduction_residual(
    w: &Expr,
    phi_w: &Expr,
    traj: &Trajectory,
    excluded: &[Expr],
) -> Result<ReductionCheck, DriftError> {
    let (wx, wu, wux) = (w.diff(Var::X), w.diff(Var::U), w.diff(Var::Ux));
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for s in &traj.steps {
        let x = s.x + 0.5 * s.h;
        let (u, ux) = (s.value(x, 0), s.value(x, 1));
        let (du, dux) = (s.derivative(x, 0), s.derivative(x, 1));
        let env = Env::jet(x, u, ux);
        let clear = excluded
            .iter()
            .all(|e| e.eval(&env).is_ok_and(|v| v.abs() >= LOCUS_MARGIN));
        if !clear {
            continue;
        }
        let ev = |e: &Expr, env: &Env| {
            e.eval(env)
                .map_err(|source| DriftError::Inadmissible { x, source })
        };
        let terms = [ev(&wx, &env)?, ev(&wu, &env)? * du, ev(&wux, &env)? * dux];
        let dw: f64 = terms.iter().sum();
        let wval = ev(w, &env)?;
        let rhs = ev(phi_w, &Env::new().with(Var::X, x).with(Var::W, wval))?;
        let scale = 1.0 + rhs.abs() + terms.iter().map(|t| t.abs()).sum::<f64>();
        worst = worst.max((dw - rhs).abs() / scale);
        checked += 1;
    }
    Ok(ReductionCheck {
        residual: worst,
        points: checked,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReductionCheck {
    pub residual: f64,
    pub points: usize,
}

/// `u(x)` with the constants `C1`, `C2` bound to values.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormSolution {
    pub u: Expr,
    pub c1: f64,
    pub c2: f64,
    pub interval: Interval,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClosedFormError {
    #[error("closed form not evaluable at x = {x}: {source}")]
    Domain { x: f64, source: EvalError },
}

impl ClosedFormSolution {
    fn env(&self, x: f64) -> Env {
        Env::new()
            .with(Var::X, x)
            .with(Var::C1, self.c1)
            .with(Var::C2, self.c2)
    }

    /// `(x, u(x), u'(x))`.
    pub fn point_at(&self, x: f64) -> Result<Point, ClosedFormError> {
        let env = self.env(x);
        let err = |source| ClosedFormError::Domain { x, source };
        let u = self.u.eval(&env).map_err(err)?;
        let ux = self.u.diff(Var::X).eval(&env).map_err(err)?;
        Ok(Point::new(x, u, ux))
    }
}

/// Max over a 200-point interior grid of `|u'' - phi(x, u, u')| / (1 + |phi|)`.
pub fn check_closed_form(sol: &ClosedFormSolution, phi: &Expr) -> Result<f64, ClosedFormError> {
    const GRID: usize = 200;
    let du = sol.u.diff(Var::X);
    let ddu = du.diff(Var::X);
    let mut worst: f64 = 0.0;
    for k in 0..GRID {
        let x = sol.interval.at((k as f64 + 0.5) / GRID as f64);
        let env = sol.env(x);
        let err = |source| ClosedFormError::Domain { x, source };
        let u = sol.u.eval(&env).map_err(err)?;
        let ux = du.eval(&env).map_err(err)?;
        let uxx = ddu.eval(&env).map_err(err)?;
        let f = phi.eval(&Env::jet(x, u, ux)).map_err(err)?;
        worst = worst.max((uxx - f).abs() / (1.0 + f.abs()));
    }
    Ok(worst)
}
