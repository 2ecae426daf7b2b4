//! Dormand–Prince 5(4) with the Hairer–Wanner continuous extension.

use super::{IntegrateError, IntegratorStats};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// One accepted step with its interpolation coefficients.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub x: f64,
    pub h: f64,
    pub coeffs: [Vec<f64>; 5],
}

impl DenseStep {
    pub fn value(&self, x: f64, i: usize) -> f64 {
        let s = (x - self.x) / self.h;
        let [c0, c1, c2, c3, c4] = &self.coeffs;
        c0[i] + s * (c1[i] + (1.0 - s) * (c2[i] + s * (c3[i] + (1.0 - s) * c4[i])))
    }

    pub fn derivative(&self, x: f64, i: usize) -> f64 {
        let s = (x - self.x) / self.h;
        let [_, c1, c2, c3, c4] = &self.coeffs;
        let a = c2[i] + s * (c3[i] + (1.0 - s) * c4[i]);
        let da = c3[i] + (1.0 - 2.0 * s) * c4[i];
        (c1[i] + (1.0 - 2.0 * s) * a + s * (1.0 - s) * da) / self.h
    }
}

pub struct Solution {
    pub xs: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub steps: Vec<DenseStep>,
    pub stats: IntegratorStats,
}

pub struct Settings {
    pub tol: f64,
    pub bound: f64,
    pub max_steps: usize,
}

/// Integrates `y' = f(x, y)` from `x0` to `x_end` (either direction).
///
/// `f` returns `None` when the right-hand side cannot be evaluated; the step
/// is then retried with a smaller size, and the step floor turns a persistent
/// failure into a singularity error.
pub fn integrate(
    mut f: impl FnMut(f64, &[f64], &mut [f64]) -> Option<()>,
    x0: f64,
    y0: &[f64],
    x_end: f64,
    set: &Settings,
) -> Result<Solution, IntegrateError> {
    let n = y0.len();
    let span = x_end - x0;
    let dir = span.signum();
    let h_floor = 1e-12 * span.abs();
    let (atol, rtol) = (set.tol, set.tol);

    let mut x = x0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    if f(x, &y, &mut k1).is_none() || k1.iter().any(|v| !v.is_finite()) {
        return Err(IntegrateError::Inadmissible { x });
    }
    let mut out = Solution {
        xs: vec![x],
        states: vec![y.clone()],
        steps: Vec::new(),
        stats: IntegratorStats::default(),
    };
    if span == 0.0 {
        return Ok(out);
    }

    let mut h = dir * initial_step(&mut f, x, &y, &k1, span, atol, rtol);
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut yt = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut reject_streak = false;

    while (x_end - x) * dir > 0.0 {
        if out.stats.steps + out.stats.rejected >= set.max_steps {
            return Err(IntegrateError::TooManySteps { x });
        }
        let last = (x + h - x_end) * dir >= 0.0;
        if last {
            h = x_end - x;
        }
        if h.abs() < h_floor && !last {
            return Err(IntegrateError::Singularity { x });
        }

        let mut ok = true;
        macro_rules! stage {
            ($k:ident, $c:expr, [$($a:expr => $kk:ident),*]) => {
                if ok {
                    for i in 0..n {
                        yt[i] = y[i] + h * (0.0 $(+ $a * $kk[i])*);
                    }
                    ok = f(x + $c * h, &yt, &mut $k).is_some()
                        && $k.iter().all(|v| v.is_finite());
                }
            };
        }
        stage!(k2, C2, [A21 => k1]);
        stage!(k3, C3, [A31 => k1, A32 => k2]);
        stage!(k4, C4, [A41 => k1, A42 => k2, A43 => k3]);
        stage!(k5, C5, [A51 => k1, A52 => k2, A53 => k3, A54 => k4]);
        stage!(k6, 1.0, [A61 => k1, A62 => k2, A63 => k3, A64 => k4, A65 => k5]);
        if ok {
            for i in 0..n {
                y1[i] = y[i]
                    + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            ok = y1.iter().all(|v| v.is_finite())
                && f(x + h, &y1, &mut k7).is_some()
                && k7.iter().all(|v| v.is_finite());
        }
        if !ok {
            out.stats.rejected += 1;
            h *= 0.25;
            if h.abs() < h_floor {
                return Err(IntegrateError::Singularity { x });
            }
            reject_streak = true;
            continue;
        }

        let mut err_sq = 0.0;
        for i in 0..n {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = atol + rtol * y[i].abs().max(y1[i].abs());
            err_sq += (e / sc).powi(2);
        }
        let err = (err_sq / n as f64).sqrt();

        if err <= 1.0 {
            let c0 = y.clone();
            let mut c1 = vec![0.0; n];
            let mut c2 = vec![0.0; n];
            let mut c3 = vec![0.0; n];
            let mut c4 = vec![0.0; n];
            for i in 0..n {
                c1[i] = y1[i] - y[i];
                c2[i] = h * k1[i] - c1[i];
                c3[i] = c1[i] - h * k7[i] - c2[i];
                c4[i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            out.steps.push(DenseStep {
                x,
                h,
                coeffs: [c0, c1, c2, c3, c4],
            });
            x = if last { x_end } else { x + h };
            y.copy_from_slice(&y1);
            std::mem::swap(&mut k1, &mut k7);
            out.stats.steps += 1;
            out.stats.max_local_error = out.stats.max_local_error.max(err * set.tol);
            out.xs.push(x);
            out.states.push(y.clone());
            if y.iter().any(|v| v.abs() > set.bound) {
                return Err(IntegrateError::BlowUp { x });
            }
            let mut fac = SAFETY * err.max(1e-10).powf(-0.2);
            if reject_streak {
                fac = fac.min(1.0);
            }
            h *= fac.clamp(FAC_MIN, FAC_MAX);
            reject_streak = false;
        } else {
            out.stats.rejected += 1;
            let fac = (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
            h *= fac;
            reject_streak = true;
        }
    }
    Ok(out)
}

fn initial_step(
    f: &mut impl FnMut(f64, &[f64], &mut [f64]) -> Option<()>,
    x: f64,
    y: &[f64],
    k1: &[f64],
    span: f64,
    atol: f64,
    rtol: f64,
) -> f64 {
    let dir = span.signum();
    let span = span.abs();
    let n = y.len() as f64;
    let norm = |v: &dyn Fn(usize) -> f64| {
        ((0..y.len())
            .map(|i| (v(i) / (atol + rtol * y[i].abs())).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
    };
    let d0 = norm(&|i| y[i]);
    let d1 = norm(&|i| k1[i]);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(span);
    let y1: Vec<f64> = (0..y.len()).map(|i| y[i] + dir * h0 * k1[i]).collect();
    let mut k2 = vec![0.0; y.len()];
    if f(x + dir * h0, &y1, &mut k2).is_none() {
        return h0 * 0.01;
    }
    let d2 = norm(&|i| k2[i] - k1[i]) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}
