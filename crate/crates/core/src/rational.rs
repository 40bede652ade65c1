//! Exact rational helpers: parsing, formatting and small numeric utilities.

use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision rational number used throughout the library.
pub type Rational = num_rational::BigRational;

/// Failure to read a rational literal.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse {input:?} as an exact rational")]
pub struct ParseRationalError {
    /// The offending literal.
    pub input: String,
}

/// Parses `"3"`, `"-3/4"`, `"0.51"` or `"1.5e-3"` into an exact rational.
pub fn parse_rational(input: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError {
        input: input.to_owned(),
    };
    let s = input.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| err())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(num, den));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp = i32::from_str(&s[pos + 1..]).map_err(|_| err())?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(err());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(BigInt::from_str(&all_digits).map_err(|_| err())?);
    let scale = exponent - i32::try_from(frac_part.len()).map_err(|_| err())?;
    value *= pow10(scale);
    if negative {
        value = -value;
    }
    Ok(value)
}

fn pow10(exp: i32) -> Rational {
    let ten = BigInt::from(10u32);
    let p = num_traits::pow(ten, exp.unsigned_abs() as usize);
    if exp >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

/// Shorthand for `num/den`; panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Integer as a rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Canonical `p/q` (or `p`) rendering.
pub fn to_exact_string(r: &Rational) -> String {
    r.to_string()
}

/// Lossy conversion used only for display and the C ABI.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact binary value of a finite double.
pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// Decimal rendering rounded (half away from zero) to `digits` significant digits.
pub fn to_decimal_string(r: &Rational, digits: u32) -> String {
    if r.is_zero() {
        return "0".to_owned();
    }
    let digits = digits.max(1);
    let negative = r.is_negative();
    let a = r.abs();
    // Estimate the decimal exponent, then correct it exactly.
    let mut e = a.numer().to_string().len() as i32 - a.denom().to_string().len() as i32;
    while a >= pow10(e + 1) {
        e += 1;
    }
    while a < pow10(e) {
        e -= 1;
    }
    let shift = digits as i32 - 1 - e;
    let scaled = &a * pow10(shift);
    let mut mantissa = round_half_away(&scaled);
    let limit = num_traits::pow(BigInt::from(10u32), digits as usize);
    if mantissa >= limit {
        mantissa /= BigInt::from(10u32);
        e += 1;
    }
    let text = mantissa.to_string();
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if e < 0 {
        out.push_str("0.");
        out.push_str(&"0".repeat((-e - 1) as usize));
        out.push_str(text.trim_end_matches('0'));
    } else {
        let int_len = e as usize + 1;
        if int_len >= text.len() {
            out.push_str(&text);
            out.push_str(&"0".repeat(int_len - text.len()));
        } else {
            out.push_str(&text[..int_len]);
            let frac = text[int_len..].trim_end_matches('0');
            if !frac.is_empty() {
                out.push('.');
                out.push_str(frac);
            }
        }
    }
    out
}

fn round_half_away(x: &Rational) -> BigInt {
    let (q, r) = x.numer().div_rem(x.denom());
    let twice = r.abs() * 2u32;
    if twice >= *x.denom() {
        if x.numer().sign() == Sign::Minus {
            q - 1
        } else {
            q + 1
        }
    } else {
        q
    }
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Binomial coefficient as an exact integer.
pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigInt::one(), |acc, j| acc * (n - j) / (j + 1))
}

/// `base^exp` for a rational base.
pub fn pow(base: &Rational, exp: u32) -> Rational {
    num_traits::pow(base.clone(), exp as usize)
}

/// Whether `x` lies in the closed unit interval.
pub fn in_unit_interval(x: &Rational) -> bool {
    !x.is_negative() && *x <= Rational::one()
}

/// Whether `x` lies strictly inside the unit interval.
pub fn in_open_unit_interval(x: &Rational) -> bool {
    x.is_positive() && *x < Rational::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_literal_forms() {
        assert_eq!(parse_rational("3").unwrap(), int(3));
        assert_eq!(parse_rational("-3/4").unwrap(), ratio(-3, 4));
        assert_eq!(parse_rational("0.51").unwrap(), ratio(51, 100));
        assert_eq!(parse_rational(".5").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("1.5e-3").unwrap(), ratio(3, 2000));
        assert_eq!(parse_rational("2E2").unwrap(), int(200));
        for bad in ["", "1/0", "abc", "1.2.3", "-", "."] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn decimal_rendering_rounds_to_significant_digits() {
        assert_eq!(to_decimal_string(&ratio(1, 3), 12), "0.333333333333");
        assert_eq!(to_decimal_string(&ratio(2, 3), 12), "0.666666666667");
        assert_eq!(to_decimal_string(&ratio(3, 80), 12), "0.0375");
        assert_eq!(to_decimal_string(&int(1200), 2), "1200");
        assert_eq!(to_decimal_string(&ratio(-19, 2), 1), "-10");
        assert_eq!(to_decimal_string(&ratio(9999, 10000), 3), "1");
        assert_eq!(to_decimal_string(&ratio(123456, 100), 12), "1234.56");
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(9, 0), BigInt::from(1));
        assert_eq!(binomial(3, 4), BigInt::from(0));
    }
}
