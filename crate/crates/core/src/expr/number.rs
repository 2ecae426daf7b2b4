use std::fmt;

use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, One, Signed, ToPrimitive, Zero};

/// Numeric literal: exact rational when possible, IEEE double otherwise.
///
/// Arithmetic stays exact until an operand is a float or an `i64` overflow
/// occurs; either case degrades to `Float`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Number {
    Rat(Rational64),
    Float(f64),
}

impl Number {
    pub fn int(n: i64) -> Number {
        Number::Rat(Rational64::from_integer(n))
    }

    pub fn rational(num: i64, den: i64) -> Number {
        Number::Rat(Rational64::new(num, den))
    }

    pub fn zero() -> Number {
        Number::int(0)
    }

    pub fn one() -> Number {
        Number::int(1)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Rat(r) => r.to_f64().unwrap_or(f64::NAN),
            Number::Float(v) => *v,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Number::Rat(r) => r.is_zero(),
            Number::Float(v) => *v == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Number::Rat(r) => r.is_one(),
            Number::Float(v) => *v == 1.0,
        }
    }

    pub fn is_minus_one(&self) -> bool {
        match self {
            Number::Rat(r) => *r == -Rational64::one(),
            Number::Float(v) => *v == -1.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Number::Rat(r) => r.is_negative(),
            Number::Float(v) => *v < 0.0,
        }
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, Number::Rat(r) if r.is_integer())
    }

    pub fn as_integer(&self) -> Option<i64> {
        match self {
            Number::Rat(r) if r.is_integer() => Some(*r.numer()),
            _ => None,
        }
    }

    fn exact_or_float(
        a: &Number,
        b: &Number,
        exact: impl Fn(&Rational64, &Rational64) -> Option<Rational64>,
        float: impl Fn(f64, f64) -> f64,
    ) -> Number {
        if let (Number::Rat(x), Number::Rat(y)) = (a, b) {
            if let Some(r) = exact(x, y) {
                return Number::Rat(r);
            }
        }
        Number::Float(float(a.to_f64(), b.to_f64()))
    }

    pub fn add(&self, other: &Number) -> Number {
        Number::exact_or_float(self, other, |x, y| x.checked_add(y), |x, y| x + y)
    }

    pub fn mul(&self, other: &Number) -> Number {
        Number::exact_or_float(self, other, |x, y| x.checked_mul(y), |x, y| x * y)
    }

    /// Panics on an exact zero divisor; callers check first.
    pub fn div(&self, other: &Number) -> Number {
        assert!(!other.is_zero(), "exact division by zero");
        Number::exact_or_float(self, other, |x, y| x.checked_div(y), |x, y| x / y)
    }

    pub fn neg(&self) -> Number {
        match self {
            Number::Rat(r) => Number::Rat(-r),
            Number::Float(v) => Number::Float(-v),
        }
    }

    pub fn abs(&self) -> Number {
        match self {
            Number::Rat(r) => Number::Rat(r.abs()),
            Number::Float(v) => Number::Float(v.abs()),
        }
    }

    /// Folds `self^e` when the result is exact (integer exponent on a
    /// rational base) or both are finite floats with a real result.
    pub fn pow(&self, e: &Number) -> Option<Number> {
        if let (Number::Rat(b), Some(k)) = (self, e.as_integer()) {
            if b.is_zero() && k < 0 {
                return None;
            }
            let k32 = i32::try_from(k).ok().filter(|k| k.abs() <= 64)?;
            return checked_powi(b, k32).map(Number::Rat);
        }
        if matches!(self, Number::Float(_)) || matches!(e, Number::Float(_)) {
            let v = self.to_f64().powf(e.to_f64());
            return v.is_finite().then_some(Number::Float(v));
        }
        None
    }
}

fn checked_powi(b: &Rational64, k: i32) -> Option<Rational64> {
    let mut acc = Rational64::one();
    for _ in 0..k.unsigned_abs() {
        acc = acc.checked_mul(b)?;
    }
    if k < 0 {
        Rational64::one().checked_div(&acc)
    } else {
        Some(acc)
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Rat(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Number::Rat(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            // Debug formatting always carries a '.' or an exponent, which is
            // what the lexer uses to tell floats from integers.
            Number::Float(v) => write!(f, "{v:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_arithmetic() {
        let half = Number::rational(1, 2);
        assert_eq!(half.add(&half), Number::one());
        assert_eq!(half.mul(&Number::int(4)), Number::int(2));
        assert_eq!(Number::int(3).div(&Number::int(6)), half);
    }

    #[test]
    fn overflow_degrades_to_float() {
        let big = Number::int(i64::MAX);
        assert!(matches!(big.add(&big), Number::Float(_)));
    }

    #[test]
    fn powers() {
        assert_eq!(
            Number::int(2).pow(&Number::int(-3)),
            Some(Number::rational(1, 8))
        );
        assert_eq!(Number::int(0).pow(&Number::int(-1)), None);
        assert_eq!(Number::int(2).pow(&Number::rational(1, 2)), None);
    }

    #[test]
    fn display_marks_floats() {
        assert_eq!(Number::Float(2.0).to_string(), "2.0");
        assert_eq!(Number::Float(1e-10).to_string(), "1e-10");
        assert_eq!(Number::rational(-3, 4).to_string(), "-3/4");
    }
}
