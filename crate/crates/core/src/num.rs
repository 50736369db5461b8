//! Exact rationals for payoffs and a small scalar abstraction shared by the
//! exact (rational) and numeric (`f64`) solver paths.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::game::InducedGame;

pub type Rational = BigRational;

/// Parses `-2`, `0.25`, `+3.`, `1e-3` or `3/4` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let s = text.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(Rational::new(num, den));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(all_digits.parse::<BigInt>().ok()?);
    let scale = exponent - frac_part.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Some(if negative { -value } else { value })
}

/// `p/q` form, or just `p` for integers.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Finite decimal when the denominator allows it, `p/q` otherwise.
pub fn format_decimal(r: &Rational) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    let mut den = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format_rational(r);
    }
    let places = twos.max(fives);
    let scaled = r * Rational::from_integer(num_traits::pow(BigInt::from(10), places));
    let digits = scaled.numer().abs().to_string();
    let padded = format!("{digits:0>width$}", width = places + 1);
    let (int_part, frac_part) = padded.split_at(padded.len() - places);
    let sign = if r.is_negative() { "-" } else { "" };
    format!("{sign}{int_part}.{frac_part}")
}

pub fn rational_from_f64(x: f64) -> Rational {
    Rational::from_float(x).unwrap_or_else(Rational::zero)
}

/// Arithmetic the equilibrium routines need, implemented for exact rationals and `f64`.
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + 'static
{
    const EXACT: bool;

    fn from_rational(r: &Rational) -> Self;
    fn from_f64(x: f64) -> Self;
    fn from_usize(x: usize) -> Self;
    fn to_f64(&self) -> f64;
    fn render(&self) -> String;

    /// Flat utility table of `g` in this representation (`profile * n + player`).
    fn utilities(g: &InducedGame) -> &[Self];

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn from_f64(x: f64) -> Self {
        rational_from_f64(x)
    }
    fn from_usize(x: usize) -> Self {
        Rational::from_integer(BigInt::from(x))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn render(&self) -> String {
        format_rational(self)
    }
    fn utilities(g: &InducedGame) -> &[Self] {
        g.exact_utilities()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_usize(x: usize) -> Self {
        x as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn render(&self) -> String {
        // Shortest representation that round-trips; `-0` prints as `0`.
        if *self == 0.0 {
            "0".to_string()
        } else {
            format!("{self}")
        }
    }
    fn utilities(g: &InducedGame) -> &[Self] {
        g.float_utilities()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn parses_decimals_and_fractions() {
        assert_eq!(parse_rational("-2"), Some(r(-2, 1)));
        assert_eq!(parse_rational("0.25"), Some(r(1, 4)));
        assert_eq!(parse_rational("-.5"), Some(r(-1, 2)));
        assert_eq!(parse_rational("1e-3"), Some(r(1, 1000)));
        assert_eq!(parse_rational("2.5E2"), Some(r(250, 1)));
        assert_eq!(parse_rational(" 3/4 "), Some(r(3, 4)));
        assert_eq!(parse_rational("-6/8"), Some(r(-3, 4)));
        for bad in ["", "abc", "1/0", "NaN", "inf", "1.2.3", "--1", "."] {
            assert_eq!(parse_rational(bad), None, "{bad}");
        }
    }

    #[test]
    fn formats() {
        assert_eq!(format_rational(&r(3, 4)), "3/4");
        assert_eq!(format_rational(&r(-2, 1)), "-2");
        assert_eq!(format_decimal(&r(1, 4)), "0.25");
        assert_eq!(format_decimal(&r(-1, 20)), "-0.05");
        assert_eq!(format_decimal(&r(1, 3)), "1/3");
        assert_eq!(format_decimal(&r(-7, 1)), "-7");
    }

    #[test]
    fn decimal_round_trip() {
        for (n, d) in [(1, 8), (-3, 40), (123, 1000), (5, 2), (-1, 3), (7, 6)] {
            let x = r(n, d);
            assert_eq!(parse_rational(&format_decimal(&x)), Some(x));
        }
    }
}
