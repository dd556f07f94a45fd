//! Exact rational numbers and the few numeric helpers the rest of the
//! crate needs. `Rational` is the only number type that appears in LPs.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = num_rational::BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("malformed rational literal {0:?}")]
    Malformed(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

/// Parses `[-]?digits(/digits)?` into a canonical rational. Stricter than
/// `BigRational::from_str`: no whitespace, no sign on the denominator, no
/// empty parts.
pub fn rational_parse(s: &str) -> Result<Rational, ParseRationalError> {
    let malformed = || ParseRationalError::Malformed(s.to_string());
    let (num_part, den_part) = match s.split_once('/') {
        Some((a, b)) => (a, Some(b)),
        None => (s, None),
    };
    let digits = num_part.strip_prefix('-').unwrap_or(num_part);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed());
    }
    let num: BigInt = num_part.parse().map_err(|_| malformed())?;
    let den: BigInt = match den_part {
        None => BigInt::one(),
        Some(d) => {
            if d.is_empty() || !d.bytes().all(|b| b.is_ascii_digit()) {
                return Err(malformed());
            }
            let den: BigInt = d.parse().map_err(|_| malformed())?;
            if den.is_zero() {
                return Err(ParseRationalError::ZeroDenominator(s.to_string()));
            }
            den
        }
    };
    Ok(Rational::new(num, den))
}

/// Renders a rational as `p` or `p/q`, the inverse of [`rational_parse`]
/// on canonical values.
pub fn rational_to_string(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Magnitude bit length of an integer, with a floor of 1 (so 0 and 1 both
/// count as one bit).
pub fn uint_bits(v: &BigUint) -> u64 {
    v.bits().max(1)
}

/// Per-entry bit cost of a rational: the larger of the magnitude bits of
/// the numerator and of the denominator.
pub fn rational_bits(r: &Rational) -> u64 {
    uint_bits(&r.numer().abs().to_biguint().unwrap()).max(uint_bits(&r.denom().to_biguint().unwrap()))
}

/// Bit length of a positive integer (`bit_len(1) = 1`); this is the `|n|`
/// used throughout the counting gadgets.
pub fn bit_len(n: u64) -> u32 {
    debug_assert!(n >= 1);
    64 - n.leading_zeros()
}

pub fn rat_int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_canonicalizes() {
        assert_eq!(rational_parse("3/6").unwrap(), rat_int(1) / rat_int(2));
        assert_eq!(rational_parse("-0/5").unwrap(), rat_int(0));
        assert_eq!(rational_parse("7").unwrap(), rat_int(7));
        assert_eq!(rational_parse("-2/4").unwrap(), rat_int(-1) / rat_int(2));
    }

    #[test]
    fn parse_rejects_malformed() {
        for bad in ["", "-", "1/", "/2", "1/-2", "+3", "1.5", " 1", "a", "1 /2"] {
            assert!(rational_parse(bad).is_err(), "accepted {bad:?}");
        }
        assert_eq!(
            rational_parse("1/0"),
            Err(ParseRationalError::ZeroDenominator("1/0".into()))
        );
    }

    #[test]
    fn display_round_trips() {
        for s in ["0", "7", "-7", "1/2", "-22/7"] {
            let r = rational_parse(s).unwrap();
            assert_eq!(rational_to_string(&r), s);
        }
    }

    #[test]
    fn bit_lengths() {
        assert_eq!(bit_len(1), 1);
        assert_eq!(bit_len(2), 2);
        assert_eq!(bit_len(3), 2);
        assert_eq!(bit_len(4), 3);
        assert_eq!(bit_len(9), 4);
        assert_eq!(rational_bits(&rat_int(0)), 1);
        assert_eq!(rational_bits(&rat_int(5)), 3);
        assert_eq!(rational_bits(&(rat_int(1) / rat_int(2))), 2);
        assert_eq!(rational_bits(&rat_int(-5)), 3);
    }
}
