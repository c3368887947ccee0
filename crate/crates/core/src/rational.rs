//! Exact rational scalars and helpers for parsing, printing and square roots.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::Error;

/// Arbitrary precision rational number, always kept in lowest terms.
pub type Rational = num_rational::BigRational;

/// Builds a rational from an integer.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Builds the rational `n/d`.
///
/// # Panics
/// Panics if `d` is zero.
pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"p/q"` or an integer string. Decimal notation is rejected.
pub fn parse_rational(s: &str) -> Result<Rational, Error> {
    let bad = || Error::Parse(format!("invalid rational {s:?}"));
    let t = s.trim();
    if t.is_empty() || t.len() > 4096 {
        return Err(bad());
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let int_ok = |x: &str, signed: bool| {
        let digits = if signed {
            x.strip_prefix('-').unwrap_or(x)
        } else {
            x
        };
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    if !int_ok(num, true) || !int_ok(den, false) {
        return Err(bad());
    }
    let n: BigInt = num.parse().map_err(|_| bad())?;
    let d: BigInt = den.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(Rational::new(n, d))
}

/// Formats as `"p/q"`, or `"p"` for integers.
pub fn fmt_rational(q: &Rational) -> String {
    q.to_string()
}

/// Exact square root if `q` is the square of a rational.
pub fn sqrt_exact(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    if &(&n * &n) == q.numer() && &(&d * &d) == q.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

/// Lossy conversion for numeric steps and plotting.
pub fn to_f64(q: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

/// A real number of the form `±sqrt(square)` with rational `square >= 0`.
///
/// Used for normalized components `β_k / |β|` whose norm may be irrational.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignedSqrt {
    pub negative: bool,
    pub square: Rational,
}

impl SignedSqrt {
    pub fn zero() -> Self {
        SignedSqrt {
            negative: false,
            square: Rational::zero(),
        }
    }

    /// `value / sqrt(norm2)`.
    pub fn normalized(value: &Rational, norm2: &Rational) -> Self {
        SignedSqrt {
            negative: value.is_negative(),
            square: value * value / norm2,
        }
    }

    pub fn from_rational(value: &Rational) -> Self {
        SignedSqrt {
            negative: value.is_negative(),
            square: value * value,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.square.is_zero()
    }

    /// Exact rational value of `self * other`, if it is rational.
    pub fn product(&self, other: &SignedSqrt) -> Option<Rational> {
        let root = sqrt_exact(&(&self.square * &other.square))?;
        Some(if self.negative != other.negative {
            -root
        } else {
            root
        })
    }

    /// Exact value if rational.
    pub fn value(&self) -> Option<Rational> {
        let r = sqrt_exact(&self.square)?;
        Some(if self.negative { -r } else { r })
    }

    pub fn to_f64(&self) -> f64 {
        let v = to_f64(&self.square).sqrt();
        if self.negative {
            -v
        } else {
            v
        }
    }
}

impl fmt::Display for SignedSqrt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(v) = self.value() {
            return write!(f, "{v}");
        }
        let sign = if self.negative { "-" } else { "" };
        write!(f, "{sign}sqrt({})", self.square)
    }
}

impl PartialOrd for SignedSqrt {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SignedSqrt {
    fn cmp(&self, other: &Self) -> Ordering {
        let key = |s: &SignedSqrt| {
            if s.negative {
                -s.square.clone()
            } else {
                s.square.clone()
            }
        };
        key(self).cmp(&key(other))
    }
}

/// `sign * r` for `sign` in `{-1, 1}`.
pub fn signed(sign: i8, r: &Rational) -> Rational {
    if sign < 0 {
        -r.clone()
    } else {
        r.clone()
    }
}

/// Affine map `r -> start + sign * r` with `sign` in `{-1, 1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Affine {
    pub start: Rational,
    pub sign: i8,
}

impl Affine {
    pub fn new(start: Rational, sign: i8) -> Self {
        Affine { start, sign }
    }

    pub fn identity() -> Self {
        Affine::new(Rational::zero(), 1)
    }

    pub fn eval(&self, r: &Rational) -> Rational {
        &self.start + signed(self.sign, r)
    }

    /// Solves `eval(r) = y` for `r`.
    pub fn inverse_at(&self, y: &Rational) -> Rational {
        signed(self.sign, &(y - &self.start))
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Affine) -> Affine {
        Affine::new(self.eval(&inner.start), self.sign * inner.sign)
    }

    /// Image of `[0, eps]` as an ordered pair.
    pub fn range(&self, eps: &Rational) -> (Rational, Rational) {
        let a = self.eval(&Rational::zero());
        let b = self.eval(eps);
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = if self.sign < 0 { '-' } else { '+' };
        if self.start.is_zero() && self.sign > 0 {
            write!(f, "r")
        } else {
            write!(f, "{} {op} r", self.start)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse_rational("3/6").unwrap(), frac(1, 2));
        assert_eq!(parse_rational("-4").unwrap(), int(-4));
        assert_eq!(parse_rational(" 10 ").unwrap(), int(10));
        assert_eq!(fmt_rational(&frac(9, 4)), "9/4");
        assert_eq!(fmt_rational(&int(2)), "2");
    }

    #[test]
    fn rejects_decimals_and_garbage() {
        for s in ["1.5", "", "1/0", "a/b", "1/-2", "--1", "1e3", "/2", "2/"] {
            assert!(parse_rational(s).is_err(), "{s}");
        }
    }

    #[test]
    fn exact_square_roots() {
        assert_eq!(sqrt_exact(&frac(9, 4)), Some(frac(3, 2)));
        assert_eq!(sqrt_exact(&frac(1, 2)), None);
        assert_eq!(sqrt_exact(&int(-1)), None);
    }

    #[test]
    fn signed_sqrt_products() {
        let a = SignedSqrt::normalized(&frac(2, 3), &frac(8, 9));
        let b = SignedSqrt::normalized(&frac(-2, 3), &frac(8, 9));
        assert_eq!(a.product(&a), Some(frac(1, 2)));
        assert_eq!(a.product(&b), Some(frac(-1, 2)));
        assert_eq!(a.value(), None);
        assert_eq!(a.to_string(), "sqrt(1/2)");
    }

    #[test]
    fn affine_compose_and_inverse() {
        let f = Affine::new(int(2), -1);
        let g = Affine::new(frac(1, 2), 1);
        let h = f.compose(&g);
        let r = frac(1, 3);
        assert_eq!(h.eval(&r), f.eval(&g.eval(&r)));
        assert_eq!(f.inverse_at(&f.eval(&r)), r);
        assert_eq!(f.range(&int(1)), (int(1), int(2)));
    }
}
