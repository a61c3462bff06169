//! Monetary values.
//!
//! Every mechanism is generic over [`Value`]. The reference configuration uses
//! exact rationals ([`Exact`]); `f64` is available as a floating-point mode.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::ops::{Add, Sub};

use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};

/// Exact rational money, the default numeric representation.
pub type Exact = Rational64;

/// An ordered additive value: valuations, payments and welfare sums.
pub trait Value:
    Clone + Debug + Display + PartialEq + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Send + Sync + 'static
{
    fn zero() -> Self;

    fn from_int(v: i64) -> Self;

    /// Midpoint of `self` and `other`, used to probe between breakpoints.
    fn midpoint(&self, other: &Self) -> Self;

    /// Total comparison. Incomparable floats (NaN) compare equal.
    fn total_cmp(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }

    /// True when a utility gain counts as a strict improvement.
    fn is_strict_gain(gain: &Self) -> bool;

    fn is_negative(&self) -> bool {
        self.total_cmp(&Self::zero()) == Ordering::Less
    }

    /// Parses a decimal string such as `"12"`, `"-0.25"` or a ratio `"3/7"`.
    fn parse_decimal(s: &str) -> Option<Self>;

    /// Renders a value so that [`Value::parse_decimal`] recovers it exactly.
    fn to_decimal_string(&self) -> String;
}

/// Floating-point tolerance for strict utility gains.
pub const FLOAT_GAIN_TOLERANCE: f64 = 1e-9;

impl Value for Exact {
    fn zero() -> Self {
        Zero::zero()
    }

    fn from_int(v: i64) -> Self {
        Rational64::from_integer(v)
    }

    fn midpoint(&self, other: &Self) -> Self {
        (*self + *other) / Rational64::from_integer(2)
    }

    fn is_strict_gain(gain: &Self) -> bool {
        *gain > Zero::zero()
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let num: i64 = num.trim().parse().ok()?;
            let den: i64 = den.trim().parse().ok()?;
            if den == 0 {
                return None;
            }
            return Some(Rational64::new(num, den));
        }
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        if frac_part.len() > 18 {
            return None;
        }
        let int_val: i64 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
        let scale = 10i64.checked_pow(frac_part.len() as u32)?;
        let frac_val: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().ok()? };
        let numer = int_val.checked_mul(scale)?.checked_add(frac_val)?;
        let r = Rational64::new(numer, scale);
        Some(if negative { -r } else { r })
    }

    fn to_decimal_string(&self) -> String {
        if self.is_integer() {
            return self.numer().to_string();
        }
        // Terminating decimals are printed as such, everything else as a ratio.
        let mut den = *self.denom();
        while den % 2 == 0 {
            den /= 2;
        }
        while den % 5 == 0 {
            den /= 5;
        }
        if den != 1 {
            return format!("{}/{}", self.numer(), self.denom());
        }
        let sign = if Signed::is_negative(self) { "-" } else { "" };
        let abs = self.abs();
        let int_part = abs.trunc().to_integer();
        let mut frac = abs.fract();
        let mut digits = String::new();
        while !frac.is_zero() {
            frac *= Rational64::from_integer(10);
            let d = frac.trunc().to_integer();
            digits.push(char::from(b'0' + d.to_u8().unwrap_or(0)));
            frac = frac.fract();
        }
        format!("{sign}{int_part}.{digits}")
    }
}

impl Value for f64 {
    fn zero() -> Self {
        0.0
    }

    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn midpoint(&self, other: &Self) -> Self {
        (self + other) / 2.0
    }

    fn is_strict_gain(gain: &Self) -> bool {
        *gain > FLOAT_GAIN_TOLERANCE
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let num: f64 = num.trim().parse().ok()?;
            let den: f64 = den.trim().parse().ok()?;
            return (den != 0.0).then(|| num / den);
        }
        s.parse().ok().filter(|v: &f64| v.is_finite())
    }

    fn to_decimal_string(&self) -> String {
        format!("{self}")
    }
}
