//! Exact-when-possible scalars.
//!
//! Vertex formulas and membership tests are evaluated in rational arithmetic
//! whenever every input is rational; any irrational input (or an `i64`
//! overflow) degrades the result to `f64` and comparisons then use
//! [`FLOAT_TOL`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Tolerance for comparisons involving at least one floating value.
pub const FLOAT_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("cannot parse `{0}` as a number (expected `a/b` or a decimal)")]
pub struct ParseNumberError(pub String);

#[derive(Clone, Copy, Debug)]
pub enum Number {
    Exact(Ratio<i64>),
    Approx(f64),
}

impl Number {
    pub fn ratio(num: i64, den: i64) -> Self {
        Number::Exact(Ratio::new(num, den))
    }

    pub fn int(n: i64) -> Self {
        Number::Exact(Ratio::from_integer(n))
    }

    pub fn float(x: f64) -> Self {
        Number::Approx(x)
    }

    pub fn zero() -> Self {
        Number::int(0)
    }

    pub fn one() -> Self {
        Number::int(1)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Number::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Number::Approx(x) => *x,
        }
    }

    /// `(numerator, denominator)` in lowest terms, if exact.
    pub fn as_ratio(&self) -> Option<(i64, i64)> {
        match self {
            Number::Exact(r) => Some((*r.numer(), *r.denom())),
            Number::Approx(_) => None,
        }
    }

    /// Three-way comparison: exact when both sides are exact, otherwise
    /// values within `tol` compare equal.
    pub fn cmp_tol(&self, other: &Number, tol: f64) -> Ordering {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => a.cmp(b),
            _ => {
                let d = self.to_f64() - other.to_f64();
                if d.abs() <= tol {
                    Ordering::Equal
                } else if d < 0.0 {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
        }
    }

    pub fn sign(&self) -> Ordering {
        self.cmp_tol(&Number::zero(), FLOAT_TOL)
    }

    pub fn approx_eq(&self, other: &Number) -> bool {
        self.cmp_tol(other, FLOAT_TOL) == Ordering::Equal
    }

    pub fn max(self, other: Number) -> Number {
        if self.cmp_tol(&other, 0.0) == Ordering::Less {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Number) -> Number {
        if self.cmp_tol(&other, 0.0) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    pub fn abs(self) -> Number {
        match self {
            Number::Exact(r) => Number::Exact(r.abs()),
            Number::Approx(x) => Number::Approx(x.abs()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Number::Exact(r) => r.is_zero(),
            Number::Approx(x) => *x == 0.0,
        }
    }

    fn combine(
        self,
        rhs: Number,
        exact: impl FnOnce(&Ratio<i64>, &Ratio<i64>) -> Option<Ratio<i64>>,
        float: impl FnOnce(f64, f64) -> f64,
    ) -> Number {
        if let (Number::Exact(a), Number::Exact(b)) = (&self, &rhs) {
            if let Some(r) = exact(a, b) {
                return Number::Exact(r);
            }
        }
        Number::Approx(float(self.to_f64(), rhs.to_f64()))
    }
}

impl From<f64> for Number {
    fn from(x: f64) -> Self {
        Number::Approx(x)
    }
}

impl From<i64> for Number {
    fn from(n: i64) -> Self {
        Number::int(n)
    }
}

impl Add for Number {
    type Output = Number;
    fn add(self, rhs: Number) -> Number {
        self.combine(rhs, |a, b| a.checked_add(b), |a, b| a + b)
    }
}

impl Sub for Number {
    type Output = Number;
    fn sub(self, rhs: Number) -> Number {
        self.combine(rhs, |a, b| a.checked_sub(b), |a, b| a - b)
    }
}

impl Mul for Number {
    type Output = Number;
    fn mul(self, rhs: Number) -> Number {
        self.combine(rhs, |a, b| a.checked_mul(b), |a, b| a * b)
    }
}

impl Div for Number {
    type Output = Number;
    fn div(self, rhs: Number) -> Number {
        self.combine(
            rhs,
            |a, b| if b.is_zero() { None } else { a.checked_div(b) },
            |a, b| a / b,
        )
    }
}

impl Neg for Number {
    type Output = Number;
    fn neg(self) -> Number {
        match self {
            Number::Exact(r) => Number::Exact(-r),
            Number::Approx(x) => Number::Approx(-x),
        }
    }
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other)
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Exact(r) if *r.denom() == 1 => write!(f, "{}", r.numer()),
            Number::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Number::Approx(x) => write!(f, "{x}"),
        }
    }
}

impl FromStr for Number {
    type Err = ParseNumberError;

    /// `a/b` and plain integers parse exactly; decimals parse as floats.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let err = || ParseNumberError(s.to_string());
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| err())?;
            let d: i64 = d.trim().parse().map_err(|_| err())?;
            if d == 0 {
                return Err(err());
            }
            return Ok(Number::ratio(n, d));
        }
        if let Ok(n) = s.parse::<i64>() {
            return Ok(Number::int(n));
        }
        let x: f64 = s.parse().map_err(|_| err())?;
        if !x.is_finite() {
            return Err(err());
        }
        Ok(Number::Approx(x))
    }
}

/// Exact values serialize as `[num, den]`, floating values as a JSON number.
impl Serialize for Number {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Number::Exact(r) => [*r.numer(), *r.denom()].serialize(s),
            Number::Approx(x) => x.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Number {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Pair([i64; 2]),
            Float(f64),
        }
        match Repr::deserialize(d)? {
            Repr::Pair([n, den]) if den != 0 => Ok(Number::ratio(n, den)),
            Repr::Pair(_) => Err(serde::de::Error::custom("zero denominator")),
            Repr::Float(x) => Ok(Number::Approx(x)),
        }
    }
}
