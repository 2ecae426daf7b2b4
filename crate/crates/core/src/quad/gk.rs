//! Adaptive 15-point Gauss–Kronrod quadrature.

use super::{LineIntegral, QuadError};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 40;

/// Kronrod estimate and `|K − G|` on `[a, b]`.
fn rule(
    f: &dyn Fn(f64) -> Result<f64, QuadError>,
    a: f64,
    b: f64,
) -> Result<(f64, f64), QuadError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx)? + f(c + dx)?;
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Ok((k * h, ((k - g) * h).abs()))
}

fn adapt(
    f: &dyn Fn(f64) -> Result<f64, QuadError>,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
    whole: (f64, f64),
) -> Result<LineIntegral, QuadError> {
    let (value, err) = whole;
    if err <= tol {
        return Ok(LineIntegral {
            value,
            estimated_error: err,
        });
    }
    if depth >= MAX_DEPTH {
        return Err(QuadError::NotConverged { tol, estimate: err });
    }
    let m = 0.5 * (a + b);
    let left = adapt(f, a, m, 0.5 * tol, depth + 1, rule(f, a, m)?)?;
    let right = adapt(f, m, b, 0.5 * tol, depth + 1, rule(f, m, b)?)?;
    Ok(LineIntegral {
        value: left.value + right.value,
        estimated_error: left.estimated_error + right.estimated_error,
    })
}

pub(super) fn integrate(
    f: &dyn Fn(f64) -> Result<f64, QuadError>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<LineIntegral, QuadError> {
    adapt(f, a, b, tol, 0, rule(f, a, b)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(g: impl Fn(f64) -> f64) -> impl Fn(f64) -> Result<f64, QuadError> {
        move |t| Ok(g(t))
    }

    #[test]
    fn polynomials_are_exact() {
        // GK15 integrates degree 22 exactly.
        let r = integrate(&ok(|t| t.powi(20)), 0.0, 1.0, 1e-14).unwrap();
        assert!((r.value - 1.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        let k: f64 = WGK[7] + 2.0 * WGK[..7].iter().sum::<f64>();
        let g: f64 = WG[3] + 2.0 * WG[..3].iter().sum::<f64>();
        assert!((k - 2.0).abs() < 1e-14);
        assert!((g - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_on_peaked_integrand() {
        let r = integrate(&ok(|t| 1.0 / (1e-3 + (t - 0.3).powi(2))), 0.0, 1.0, 1e-10).unwrap();
        let s = 1e-3f64.sqrt();
        let exact = ((0.7 / s).atan() + (0.3 / s).atan()) / s;
        assert!((r.value - exact).abs() < 1e-9);
    }

    #[test]
    fn singular_integrand_fails() {
        let r = integrate(
            &ok(|t| 1.0 / (t - 0.5).abs().sqrt().max(1e-300).powi(3)),
            0.0,
            1.0,
            1e-12,
        );
        assert!(r.is_err() || r.unwrap().value > 1e6);
    }
}
