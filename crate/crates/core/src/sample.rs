//! Sampling boxes and the numerical zero test.
//!
//! Identities between expressions are certified by evaluating the residual at
//! low-discrepancy points (Halton sequence with a seeded Cranley-Patterson
//! rotation) and comparing it, relative to the size of its top-level terms,
//! against a tolerance.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Env, Expr, Var};

pub const DEFAULT_SEED: u64 = 1729;

/// Candidate points closer than this to an excluded locus (or to the
/// boundary of a positivity constraint) are rejected.
pub const LOCUS_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub u: f64,
    pub ux: f64,
}

impl Point {
    pub fn new(x: f64, u: f64, ux: f64) -> Point {
        Point { x, u, ux }
    }

    pub fn get(&self, v: Var) -> Option<f64> {
        match v {
            Var::X => Some(self.x),
            Var::U => Some(self.u),
            Var::Ux => Some(self.ux),
            _ => None,
        }
    }

    pub fn set(&mut self, v: Var, value: f64) {
        match v {
            Var::X => self.x = value,
            Var::U => self.u = value,
            Var::Ux => self.ux = value,
            _ => panic!("{v} is not a jet coordinate"),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.u.is_finite() && self.ux.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        assert!(lo < hi, "degenerate interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn at(&self, t: f64) -> f64 {
        self.lo + t * (self.hi - self.lo)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SampleError {
    #[error("could only find {found} of {wanted} admissible points after {attempts} candidates")]
    BoxExhausted {
        wanted: usize,
        found: usize,
        attempts: usize,
    },
}

/// A product of closed intervals, minus excluded loci.
///
/// `excluded` expressions must stay away from zero; `positive` expressions
/// must stay positive (used to select one real branch of a closed form).
/// `fixed` binds parameters such as `C` for every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBox {
    pub ranges: Vec<(Var, Interval)>,
    pub fixed: Vec<(Var, f64)>,
    pub excluded: Vec<Expr>,
    pub positive: Vec<Expr>,
}

impl SampleBox {
    pub fn new(ranges: Vec<(Var, Interval)>) -> SampleBox {
        SampleBox {
            ranges,
            fixed: Vec::new(),
            excluded: Vec::new(),
            positive: Vec::new(),
        }
    }

    pub fn jet(x: Interval, u: Interval, ux: Interval) -> SampleBox {
        SampleBox::new(vec![(Var::X, x), (Var::U, u), (Var::Ux, ux)])
    }

    pub fn excluding(mut self, e: Expr) -> SampleBox {
        self.excluded.push(e);
        self
    }

    pub fn requiring_positive(mut self, e: Expr) -> SampleBox {
        self.positive.push(e);
        self
    }

    pub fn fixing(mut self, v: Var, value: f64) -> SampleBox {
        self.fixed.retain(|(w, _)| *w != v);
        self.fixed.push((v, value));
        self
    }

    pub fn range(&self, v: Var) -> Option<Interval> {
        self.ranges.iter().find(|(w, _)| *w == v).map(|(_, i)| *i)
    }

    pub fn env_with_fixed(&self) -> Env {
        let mut env = Env::new();
        for (v, val) in &self.fixed {
            env.set(*v, *val);
        }
        env
    }

    pub fn contains(&self, env: &Env) -> bool {
        self.ranges
            .iter()
            .all(|(v, i)| env.get(*v).is_some_and(|val| i.contains(val)))
    }

    /// Inside the box and away from every excluded locus.
    pub fn admissible(&self, env: &Env) -> bool {
        self.contains(env) && self.clear_of_loci(env)
    }

    pub fn clear_of_loci(&self, env: &Env) -> bool {
        let away = |e: &Expr, ok: &dyn Fn(f64) -> bool| e.eval(env).is_ok_and(ok);
        self.excluded
            .iter()
            .all(|e| away(e, &|v| v.abs() >= LOCUS_MARGIN))
            && self
                .positive
                .iter()
                .all(|e| away(e, &|v| v >= LOCUS_MARGIN))
    }

    /// `n` admissible points, deterministic in `seed`.
    pub fn points(&self, n: usize, seed: u64) -> Result<Vec<Env>, SampleError> {
        let mut halton = Halton::new(self.ranges.len(), seed);
        let max_attempts = 100 * n + 1000;
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0;
        while out.len() < n {
            if attempts >= max_attempts {
                return Err(SampleError::BoxExhausted {
                    wanted: n,
                    found: out.len(),
                    attempts,
                });
            }
            attempts += 1;
            let t = halton.next_point();
            let mut env = self.env_with_fixed();
            for ((v, i), ti) in self.ranges.iter().zip(&t) {
                env.set(*v, i.at(*ti));
            }
            if self.clear_of_loci(&env) {
                out.push(env);
            }
        }
        Ok(out)
    }
}

/// Halton sequence in the first `dim` prime bases, rotated by a seeded
/// uniform shift modulo 1.
pub struct Halton {
    bases: Vec<u64>,
    shift: Vec<f64>,
    index: u64,
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Halton {
        assert!(dim <= PRIMES.len(), "at most {} dimensions", PRIMES.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Halton {
            bases: PRIMES[..dim].to_vec(),
            shift: (0..dim).map(|_| rng.random::<f64>()).collect(),
            index: 0,
        }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        self.index += 1;
        self.bases
            .iter()
            .zip(&self.shift)
            .map(|(&b, &s)| (radical_inverse(self.index, b) + s).fract())
            .collect()
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Sample location reported in certificates.
pub type Witness = BTreeMap<Var, f64>;

pub fn witness_of(env: &Env, vars: impl IntoIterator<Item = Var>) -> Witness {
    vars.into_iter()
        .filter_map(|v| env.get(v).map(|val| (v, val)))
        .collect()
}

/// Residual at one sample: `relative = |value| / (1 + scale)` where `scale` is
/// the largest magnitude among the top-level additive terms.
#[derive(Debug, Clone, Copy)]
pub struct SampledResidual {
    pub value: f64,
    pub relative: f64,
}

pub fn relative_residual(e: &Expr, terms: &[Expr], env: &Env) -> SampledResidual {
    let mut sum = 0.0;
    let mut scale: f64 = 0.0;
    for t in terms {
        match t.eval(env) {
            Ok(v) => {
                sum += v;
                scale = scale.max(v.abs());
            }
            Err(_) => {
                return SampledResidual {
                    value: f64::NAN,
                    relative: f64::INFINITY,
                }
            }
        }
    }
    if terms.is_empty() {
        // Only possible for a literal; evaluate directly.
        sum = e.eval(env).unwrap_or(f64::NAN);
        scale = sum.abs();
    }
    let relative = if sum.is_finite() {
        sum.abs() / (1.0 + scale)
    } else {
        f64::INFINITY
    };
    SampledResidual {
        value: sum,
        relative,
    }
}

/// Outcome of a sampled zero test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroTest {
    pub passed: bool,
    pub max_relative: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_value: Option<f64>,
}

impl ZeroTest {
    /// Combines component tests; the worst component provides the witness.
    pub fn all(tests: impl IntoIterator<Item = ZeroTest>) -> ZeroTest {
        let mut out: Option<ZeroTest> = None;
        for t in tests {
            out = Some(match out {
                None => t,
                Some(acc) => {
                    let worse = if t.max_relative > acc.max_relative || t.max_relative.is_nan() {
                        &t
                    } else {
                        &acc
                    };
                    ZeroTest {
                        passed: acc.passed && t.passed,
                        max_relative: worse.max_relative,
                        tolerance: acc.tolerance.max(t.tolerance),
                        samples: acc.samples.max(t.samples),
                        failures: acc.failures + t.failures,
                        witness: worse.witness.clone(),
                        witness_value: worse.witness_value,
                    }
                }
            });
        }
        out.unwrap_or(ZeroTest {
            passed: true,
            max_relative: 0.0,
            tolerance: 0.0,
            samples: 0,
            failures: 0,
            witness: None,
            witness_value: None,
        })
    }
}

/// Residuals of `e` at the given points.
pub fn residuals_at(e: &Expr, points: &[Env]) -> Vec<SampledResidual> {
    let terms = e.terms();
    points
        .iter()
        .map(|env| relative_residual(e, &terms, env))
        .collect()
}

pub fn zero_test_at(e: &Expr, points: &[Env], tol: f64, vars: &[Var]) -> ZeroTest {
    let res = residuals_at(e, points);
    let mut worst: Option<usize> = None;
    let mut failures = 0;
    for (i, r) in res.iter().enumerate() {
        if r.relative.is_nan() || r.relative > tol {
            failures += 1;
        }
        let is_worse = match worst {
            None => true,
            Some(j) => {
                r.relative > res[j].relative || (r.relative.is_nan() && !res[j].relative.is_nan())
            }
        };
        if is_worse {
            worst = Some(i);
        }
    }
    let passed = failures == 0;
    let max_relative = worst.map_or(0.0, |i| res[i].relative);
    let (witness, witness_value) = match worst {
        Some(i) if !passed => (
            Some(witness_of(&points[i], vars.iter().copied())),
            Some(res[i].value),
        ),
        _ => (None, None),
    };
    ZeroTest {
        passed,
        max_relative,
        tolerance: tol,
        samples: points.len(),
        failures,
        witness,
        witness_value,
    }
}

/// Certifies `e ≡ 0` on the box: passes iff the relative residual is within
/// `tol` at each of `n` admissible quasi-random points.
pub fn is_zero_sampled(
    e: &Expr,
    sbox: &SampleBox,
    n: usize,
    tol: f64,
    seed: u64,
) -> Result<ZeroTest, SampleError> {
    assert!(n >= 1, "need at least one sample");
    let points = sbox.points(n, seed)?;
    let vars: Vec<Var> = sbox.ranges.iter().map(|(v, _)| *v).collect();
    Ok(zero_test_at(e, &points, tol, &vars))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn unit_box() -> SampleBox {
        SampleBox::jet(
            Interval::new(0.0, 1.0),
            Interval::new(0.5, 2.0),
            Interval::new(-2.0, 2.0),
        )
    }

    #[test]
    fn halton_is_deterministic_and_in_range() {
        let mut a = Halton::new(3, 7);
        let mut b = Halton::new(3, 7);
        for _ in 0..100 {
            let p = a.next_point();
            assert_eq!(p, b.next_point());
            assert!(p.iter().all(|t| (0.0..1.0).contains(t)));
        }
        let mut c = Halton::new(3, 8);
        assert_ne!(Halton::new(3, 7).next_point(), c.next_point());
    }

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn cancelling_expression_is_zero() {
        let e = parse("x*u").unwrap() - parse("u*x").unwrap();
        let t = is_zero_sampled(&e, &unit_box(), 50, 1e-12, DEFAULT_SEED).unwrap();
        assert!(t.passed);
    }

    #[test]
    fn non_identity_reports_witness() {
        let e = parse("ux - u").unwrap();
        let t = is_zero_sampled(&e, &unit_box(), 50, 1e-9, DEFAULT_SEED).unwrap();
        assert!(!t.passed);
        let w = t.witness.unwrap();
        assert_eq!(w.len(), 3);
        assert!(t.witness_value.unwrap().abs() > 0.0);
    }

    #[test]
    fn excluded_loci_are_avoided() {
        let b = SampleBox::jet(
            Interval::new(0.0, 1.0),
            Interval::new(-1.0, 1.0),
            Interval::new(-1.0, 1.0),
        )
        .excluding(Expr::u());
        for env in b.points(300, 3).unwrap() {
            assert!(env.get(Var::U).unwrap().abs() >= LOCUS_MARGIN);
        }
    }

    #[test]
    fn impossible_box_is_exhausted() {
        let b = unit_box().requiring_positive(parse("-1").unwrap());
        assert!(matches!(
            b.points(5, 1),
            Err(SampleError::BoxExhausted { .. })
        ));
    }

    #[test]
    fn relative_scale_uses_terms() {
        // 1e6 u - (1e6 ux - 1e-4) at u = ux: absolute residual 1e-4, relative ~1e-10.
        let e = Expr::float(1e6) * Expr::u() - (Expr::float(1e6) * Expr::ux() - Expr::float(1e-4));
        let r = residuals_at(&e, &[Env::jet(0.0, 1.0, 1.0)]);
        assert!(r[0].relative < 1e-9);
    }
}
