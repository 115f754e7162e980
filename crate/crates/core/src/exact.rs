//! Exact rational numbers and their `"p/q"` text form.

use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::ParseRationalError;

/// Arbitrary-precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Rational = num_rational::BigRational;

/// Builds `p/q` from machine integers. Panics if `q == 0`.
pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn int(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

/// Parses `"p/q"`, `"p"` or `"-p/q"`. Whitespace around the parts is
/// tolerated, a zero denominator is not.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let bad = || ParseRationalError(text.to_string());
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text.trim(), "1"),
    };
    let num = BigInt::from_str(num).map_err(|_| bad())?;
    let den = BigInt::from_str(den).map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

/// Canonical text form, always with an explicit denominator (`"1/1"`).
pub fn format_rational(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// gcd with one remainder step first. The library gcd is binary and slows
/// to a crawl when one operand is tiny and the other has thousands of bits.
pub fn gcd_lopsided(a: &BigInt, b: &BigInt) -> BigInt {
    use num_integer::Integer;
    let (small, large) = if a.bits() <= b.bits() { (a, b) } else { (b, a) };
    if small.is_zero() {
        return large.abs();
    }
    small.gcd(&(large % small))
}

/// `a * b`, cancelling crosswise with [`gcd_lopsided`].
pub fn mul_exact(a: &Rational, b: &Rational) -> Rational {
    let g1 = gcd_lopsided(a.numer(), b.denom());
    let g2 = gcd_lopsided(b.numer(), a.denom());
    Rational::new_raw(
        (a.numer() / &g1) * (b.numer() / &g2),
        (a.denom() / &g2) * (b.denom() / &g1),
    )
}

/// Nearest `f64`; exact for small operands, correctly scaled for huge ones.
pub fn to_f64(x: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    if let (Some(n), Some(d)) = (x.numer().to_f64(), x.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Shift both sides down to 64 significant bits.
    let nb = x.numer().bits() as i64;
    let db = x.denom().bits() as i64;
    let n = (x.numer().abs() >> (nb - 64).max(0) as usize).to_f64().unwrap_or(0.0);
    let d = (x.denom() >> (db - 64).max(0) as usize).to_f64().unwrap_or(1.0);
    let value = n / d * 2f64.powi(((nb - 64).max(0) - (db - 64).max(0)) as i32);
    if x.is_negative() {
        -value
    } else {
        value
    }
}

pub fn half() -> Rational {
    rat(1, 2)
}

pub fn is_integer(x: &Rational) -> bool {
    x.denom().is_one()
}

/// serde adapter writing rationals as `"p/q"` strings.
pub mod serde_rational {
    use super::{format_rational, parse_rational, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(D::Error::custom)
    }
}

/// serde adapter for `Vec<Rational>`.
pub mod serde_rational_vec {
    use super::{format_rational, parse_rational, Rational};
    use serde::{de::Error, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&format_rational(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| parse_rational(t).map_err(D::Error::custom))
            .collect()
    }
}

/// serde adapter for optional rationals.
pub mod serde_rational_opt {
    use super::{format_rational, parse_rational, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(x) => s.serialize_some(&format_rational(x)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        let text = Option::<String>::deserialize(d)?;
        text.map(|t| parse_rational(&t).map_err(D::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("2/4").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("3").unwrap(), int(3));
        assert_eq!(parse_rational(" -6 / 9 ").unwrap(), rat(-2, 3));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x/2").is_err());
        assert_eq!(format_rational(&int(1)), "1/1");
        assert_eq!(format_rational(&rat(-4, 6)), "-2/3");
    }

    #[test]
    fn huge_to_f64() {
        let big = Rational::new(BigInt::from(3).pow(4000), BigInt::from(3).pow(3999));
        assert!((to_f64(&big) - 3.0).abs() < 1e-12);
        let tiny = Rational::new(BigInt::one(), BigInt::from(2).pow(1500));
        assert_eq!(to_f64(&tiny), 0.0);
    }

    fn arb_rational() -> impl Strategy<Value = Rational> {
        (any::<i64>(), 1i64..=i64::MAX).prop_map(|(p, q)| rat(p, q))
    }

    proptest! {
        #[test]
        fn field_identities(a in arb_rational(), b in arb_rational()) {
            prop_assert_eq!(&(&a + &b) - &b, a.clone());
            if !b.is_zero() {
                prop_assert_eq!(&(&a * &b) / &b, a.clone());
            }
            prop_assert!(a.denom().is_positive());
        }

        #[test]
        fn text_round_trip(a in arb_rational()) {
            prop_assert_eq!(parse_rational(&format_rational(&a)).unwrap(), a);
        }
    }
}
