//! Cost scalars.
//!
//! Every solver is generic over the cost type. Floating-point costs compare
//! at an absolute tolerance; rational costs compare exactly.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};

/// A nonnegative cost value.
pub trait Scalar:
    Num
    + Copy
    + PartialOrd
    + Debug
    + Display
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Absolute tolerance used for equality and ordering decisions.
    fn tolerance() -> Self;

    /// `false` for NaN and infinities.
    fn is_finite_value(self) -> bool;

    fn approx_eq(self, other: Self) -> bool {
        let diff = if self > other {
            self - other
        } else {
            other - self
        };
        diff <= Self::tolerance()
    }

    /// `self < other` by more than the tolerance.
    fn definitely_lt(self, other: Self) -> bool {
        self + Self::tolerance() < other
    }

    fn approx_le(self, other: Self) -> bool {
        !other.definitely_lt(self)
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Cost as it appears in instance files: integral values print as
    /// integers.
    fn to_json(self) -> serde_json::Value {
        match self.to_i64() {
            Some(i) if self == Self::from_i64(i).expect("round trip") => i.into(),
            _ => serde_json::to_value(self).expect("cost serializes"),
        }
    }

    /// Accepts integers, decimals and `"p/q"` strings.
    fn from_json(v: &serde_json::Value) -> Option<Self> {
        match v {
            serde_json::Value::Number(x) => match x.as_i64() {
                Some(i) => Self::from_i64(i),
                None => parse_decimal(&x.to_string()),
            },
            serde_json::Value::String(s) => parse_decimal(s).or_else(|| {
                let (p, q) = s.split_once('/')?;
                let p = Self::from_i64(p.trim().parse().ok()?)?;
                let q = Self::from_i64(q.trim().parse().ok()?)?;
                (q != Self::zero()).then(|| p / q)
            }),
            _ => serde_json::from_value(v.clone()).ok(),
        }
    }
}

/// Exact for plain decimals such as `2.75`; exponents go through f64.
fn parse_decimal<T: Scalar>(s: &str) -> Option<T> {
    let s = s.trim();
    if s.contains(['e', 'E']) {
        return T::from_f64(s.parse().ok()?);
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty()
        || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits: i64 = format!("{int}{frac}").parse().ok()?;
    let scale = 10i64.checked_pow(frac.len() as u32)?;
    let v = T::from_i64(digits)? / T::from_i64(scale)?;
    Some(if neg { T::zero() - v } else { v })
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-9
    }

    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-5
    }

    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Ratio<i64> {
    fn tolerance() -> Self {
        Ratio::from_integer(0)
    }

    fn is_finite_value(self) -> bool {
        true
    }

    fn definitely_lt(self, other: Self) -> bool {
        self < other
    }
}

/// Sum of an iterator of costs, starting from zero.
pub fn total<T: Scalar, I: IntoIterator<Item = T>>(items: I) -> T {
    items.into_iter().fold(T::zero(), |acc, c| acc + c)
}
