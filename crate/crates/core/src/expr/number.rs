use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedMul, One, Signed, ToPrimitive, Zero};

/// Numeric payload of a constant node.
///
/// Literals that are integers or finite decimals stay exact; anything that
/// overflows 64-bit rationals degrades to a double.
#[derive(Clone, Copy, Debug)]
pub enum Number {
    Rational(Rational64),
    Float(f64),
}

impl Number {
    pub const ZERO: Number = Number::Rational(Rational64::new_raw(0, 1));
    pub const ONE: Number = Number::Rational(Rational64::new_raw(1, 1));

    pub fn int(value: i64) -> Self {
        Number::Rational(Rational64::from_integer(value))
    }

    pub fn ratio(numer: i64, denom: i64) -> Self {
        Number::Rational(Rational64::new(numer, denom))
    }

    /// Parses a decimal literal (`12`, `0.25`, `1e-3`, `.5`) exactly when possible.
    pub fn from_literal(text: &str) -> Option<Self> {
        let (mantissa, exponent) = match text.find(['e', 'E']) {
            Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
            None => (text, 0),
        };
        let (int_part, frac_part) = match mantissa.find('.') {
            Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
            None => (mantissa, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        let digits: String = format!("{int_part}{frac_part}");
        if !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let float = text.parse::<f64>().ok()?;
        let exact = (|| {
            let mant: i64 = digits.trim_start_matches('0').parse::<i64>().or_else(|e| {
                if digits.bytes().all(|b| b == b'0') {
                    Ok(0)
                } else {
                    Err(e)
                }
            }).ok()?;
            let shift = exponent.checked_sub(frac_part.len() as i32)?;
            let pow10 = 10i64.checked_pow(shift.unsigned_abs())?;
            if shift >= 0 {
                Some(Rational64::from_integer(mant.checked_mul(pow10)?))
            } else {
                Some(Rational64::new(mant, pow10))
            }
        })();
        Some(match exact {
            Some(r) => Number::Rational(r),
            None => Number::Float(float),
        })
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Number::Rational(r) => {
                let n = *r.numer() as f64;
                let d = *r.denom() as f64;
                if r.denom().unsigned_abs() < (1 << 53) && r.numer().unsigned_abs() < (1 << 53) {
                    n / d
                } else {
                    r.to_f64().unwrap_or(n / d)
                }
            }
            Number::Float(x) => x,
        }
    }

    pub fn is_zero(self) -> bool {
        match self {
            Number::Rational(r) => r.is_zero(),
            Number::Float(x) => x == 0.0,
        }
    }

    pub fn is_one(self) -> bool {
        match self {
            Number::Rational(r) => r.is_one(),
            Number::Float(x) => x == 1.0,
        }
    }

    pub fn is_negative(self) -> bool {
        match self {
            Number::Rational(r) => r.is_negative(),
            Number::Float(x) => x < 0.0,
        }
    }

    pub fn is_integer(self) -> bool {
        matches!(self, Number::Rational(r) if r.is_integer())
    }

    /// Integer power; `None` when the base is zero and the exponent negative.
    pub fn powi(self, exp: i32) -> Option<Number> {
        if self.is_zero() && exp < 0 {
            return None;
        }
        match self {
            Number::Rational(r) => {
                let base = if exp < 0 { r.recip() } else { r };
                let mut acc = Rational64::one();
                for _ in 0..exp.unsigned_abs() {
                    match acc.checked_mul(&base) {
                        Some(next) => acc = next,
                        None => return Some(Number::Float(self.to_f64().powi(exp))),
                    }
                }
                Some(Number::Rational(acc))
            }
            Number::Float(x) => Some(Number::Float(x.powi(exp))),
        }
    }

    /// Total order used for canonical sorting.
    pub(crate) fn total_cmp(&self, other: &Number) -> Ordering {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => a.cmp(b),
            (Number::Rational(_), Number::Float(_)) => Ordering::Less,
            (Number::Float(_), Number::Rational(_)) => Ordering::Greater,
            (Number::Float(a), Number::Float(b)) => a.total_cmp(b),
        }
    }
}

impl std::ops::Add for Number {
    type Output = Number;

    fn add(self, other: Number) -> Number {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => match a.checked_add(&b) {
                Some(r) => Number::Rational(r),
                None => Number::Float(self.to_f64() + other.to_f64()),
            },
            _ => Number::Float(self.to_f64() + other.to_f64()),
        }
    }
}

impl std::ops::Mul for Number {
    type Output = Number;

    fn mul(self, other: Number) -> Number {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => match a.checked_mul(&b) {
                Some(r) => Number::Rational(r),
                None => Number::Float(self.to_f64() * other.to_f64()),
            },
            _ => Number::Float(self.to_f64() * other.to_f64()),
        }
    }
}

impl std::ops::Neg for Number {
    type Output = Number;

    fn neg(self) -> Number {
        match self {
            Number::Rational(r) => match r.numer().checked_neg() {
                Some(n) => Number::Rational(Rational64::new_raw(n, *r.denom())),
                None => Number::Float(-self.to_f64()),
            },
            Number::Float(x) => Number::Float(-x),
        }
    }
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => a == b,
            (Number::Float(a), Number::Float(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}

impl Eq for Number {}

impl Hash for Number {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Number::Rational(r) => {
                0u8.hash(state);
                r.numer().hash(state);
                r.denom().hash(state);
            }
            Number::Float(x) => {
                1u8.hash(state);
                x.to_bits().hash(state);
            }
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Rational(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Number::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Number::Float(x) => write!(f, "{x:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_stay_exact() {
        assert_eq!(Number::from_literal("12"), Some(Number::int(12)));
        assert_eq!(Number::from_literal("0.25"), Some(Number::ratio(1, 4)));
        assert_eq!(Number::from_literal(".5"), Some(Number::ratio(1, 2)));
        assert_eq!(Number::from_literal("1e-3"), Some(Number::ratio(1, 1000)));
        assert_eq!(Number::from_literal("2.5E2"), Some(Number::int(250)));
        assert_eq!(Number::from_literal("000"), Some(Number::int(0)));
    }

    #[test]
    fn huge_literals_degrade_to_float() {
        let n = Number::from_literal("123456789012345678901234567890").unwrap();
        assert!(matches!(n, Number::Float(_)));
        assert!((n.to_f64() - 1.2345678901234568e29).abs() < 1e15);
    }

    #[test]
    fn arithmetic_is_exact_and_overflow_safe() {
        let third = Number::ratio(1, 3);
        assert_eq!(third + third + third, Number::ONE);
        assert_eq!(Number::int(2).powi(-2), Some(Number::ratio(1, 4)));
        assert_eq!(Number::ZERO.powi(-1), None);
        let big = Number::int(i64::MAX);
        assert!(matches!(big * big, Number::Float(_)));
        assert!(matches!(-Number::int(i64::MIN), Number::Float(_)));
    }
}
