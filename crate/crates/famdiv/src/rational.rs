//! Exact rational arithmetic used throughout the crate.
//!
//! Every coordinate, density, and value in this library is a [`Rational`]:
//! an arbitrary-precision fraction kept in canonical reduced form (gcd 1,
//! positive denominator). No floating point is used anywhere in the core,
//! so comparisons such as "is this allocation envy-free" are decided
//! exactly, never within a tolerance that the caller did not ask for.
//!
//! The interchange format for rationals is the string `"p/q"`, or a bare
//! integer when the denominator is 1. [`parse_rational`] accepts both and
//! rejects anything else (floats, empty strings, zero denominators).

use num::bigint::BigInt;
use num::BigRational;
use std::str::FromStr;

/// Arbitrary-precision rational number in canonical reduced form.
pub type Rational = BigRational;

/// Builds the rational `n/d`. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    assert!(d != 0, "rational denominator must be nonzero");
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Builds the integer rational `n`.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"` or a bare integer string into a [`Rational`].
///
/// The result is reduced to canonical form (`"-2/8"` parses to `-1/4`).
/// Returns an error for floats, empty input, and zero denominators.
pub fn parse_rational(text: &str) -> Result<Rational, RationalParseError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(RationalParseError::new(text, "empty string"));
    }
    if let Some((_, den)) = trimmed.split_once('/') {
        // Catch `"3/0"` before handing it to the bigint machinery, so the
        // error names the actual problem rather than a generic parse failure.
        let den = den.trim();
        if den.chars().all(|c| c == '0') && !den.is_empty() {
            return Err(RationalParseError::new(text, "zero denominator"));
        }
    }
    BigRational::from_str(trimmed).map_err(|e| RationalParseError::new(text, &e.to_string()))
}

/// Formats a rational in the interchange format: `"p/q"`, or `"p"` when the
/// denominator is 1. This is the inverse of [`parse_rational`].
pub fn format_rational(value: &Rational) -> String {
    value.to_string()
}

/// Error produced when a string is not a valid rational.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational {text:?}: {reason}")]
pub struct RationalParseError {
    /// The offending input, verbatim.
    pub text: String,
    /// Human-readable cause.
    pub reason: String,
}

impl RationalParseError {
    fn new(text: &str, reason: &str) -> Self {
        Self {
            text: text.to_owned(),
            reason: reason.to_owned(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::Zero;

    #[test]
    fn constructors_reduce() {
        assert_eq!(rat(6, 4), rat(3, 2));
        assert_eq!(rat(-3, 6), rat(1, -2));
        assert_eq!(int(7), rat(7, 1));
        assert!(rat(0, 5).is_zero());
    }

    #[test]
    fn parse_accepts_fractions_and_integers() {
        assert_eq!(parse_rational("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rational("-2/8").unwrap(), rat(-1, 4));
        assert_eq!(parse_rational("7").unwrap(), int(7));
        assert_eq!(parse_rational(" 5/10 ").unwrap(), rat(1, 2));
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1.5").is_err());
        assert!(parse_rational("3/0").is_err());
        assert!(parse_rational("a/b").is_err());
    }

    #[test]
    fn format_round_trips() {
        for r in [rat(3, 4), int(-2), rat(22, 7), int(0)] {
            assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
        }
        assert_eq!(format_rational(&int(5)), "5");
        assert_eq!(format_rational(&rat(5, 2)), "5/2");
    }
}
