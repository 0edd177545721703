//! Exact rational arithmetic helpers.
//!
//! All quantities in this crate are arbitrary-precision rationals. Inputs
//! arrive as integers, fractions like `"47/5"`, or decimal strings like
//! `"9.4"` and `"2.5e-3"`; decimals are read in base 10 exactly, never
//! through binary floating point. Output formatting is the reverse mapping:
//! `"p"` for integers, `"p/q"` otherwise, always in lowest terms with a
//! positive denominator (which `Ratio` guarantees by construction).

use num::bigint::BigInt;
use num::{One, ToPrimitive, Zero};

use crate::{Error, Result};

pub type Rational = num::BigRational;

/// Largest decimal exponent accepted when parsing; keeps a stray
/// `"1e999999999"` from allocating gigabytes.
const MAX_DECIMAL_EXPONENT: i64 = 10_000;

/// `n/d` as a rational. Panics if `d == 0`; intended for literals.
pub fn rat(n: i64, d: i64) -> Rational {
    assert!(d != 0, "zero denominator");
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// The integer `n` as a rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Exact sum of a slice.
pub fn total(values: &[Rational]) -> Rational {
    values.iter().fold(Rational::zero(), |acc, v| acc + v)
}

/// Nearest f64, for display and CSV convenience columns only.
pub fn approx(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Render in canonical form: `"p"` when the denominator is 1, else `"p/q"`.
pub fn format_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Parse `"p/q"`, an integer, or a base-10 decimal with optional exponent.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let fail = || Error::ParseNumber(text.to_string());
    if s.is_empty() {
        return Err(fail());
    }

    if let Some((numer, denom)) = s.split_once('/') {
        let n: BigInt = numer.trim().parse().map_err(|_| fail())?;
        let d: BigInt = denom.trim().parse().map_err(|_| fail())?;
        if d.is_zero() {
            return Err(fail());
        }
        return Ok(Rational::new(n, d));
    }

    // Decimal form: [sign] digits [. digits] [eE [sign] digits]
    let (mantissa, exponent) = match s.split_once(['e', 'E']) {
        Some((m, e)) => {
            let exp: i64 = e.parse().map_err(|_| fail())?;
            (m, exp)
        }
        None => (s, 0),
    };
    if exponent.abs() > MAX_DECIMAL_EXPONENT {
        return Err(fail());
    }

    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(fail());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(fail());
    }

    let joined = format!("{int_part}{frac_part}");
    let mantissa_int: BigInt = if joined.is_empty() {
        BigInt::zero()
    } else {
        joined.parse().map_err(|_| fail())?
    };
    let shift = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let value = if shift >= 0 {
        Rational::from_integer(mantissa_int * num::pow(ten, shift as usize))
    } else {
        Rational::new(mantissa_int, num::pow(ten, (-shift) as usize))
    };
    Ok(if sign < 0 { -value } else { value })
}
