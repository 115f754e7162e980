//! Exact linear combinations of logarithms, `sum_i c_i ln(a_i)` with rational
//! `c_i` and positive integers `a_i`, evaluated in binary fixed point to any
//! requested precision.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::exact::Rational;

/// Extra bits carried through every evaluation.
const GUARD_BITS: u64 = 32;

/// Bits needed for `digits` decimal digits after the point.
pub fn bits_for_digits(digits: u32) -> u64 {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as u64 + 8
}

#[derive(Clone, Default, PartialEq, Eq)]
pub struct LogExpr {
    terms: BTreeMap<BigUint, Rational>,
}

impl fmt::Debug for LogExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (a, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            let arg = a.to_string();
            if arg.len() > 24 {
                write!(f, "({c})·ln(<{} digits>)", arg.len())?;
            } else {
                write!(f, "({c})·ln({arg})")?;
            }
        }
        Ok(())
    }
}

impl LogExpr {
    pub fn zero() -> Self {
        LogExpr::default()
    }

    /// `coeff · ln(arg)`; panics on `arg == 0`.
    pub fn term(coeff: Rational, arg: BigUint) -> Self {
        assert!(!arg.is_zero(), "logarithm of zero");
        let mut e = LogExpr::zero();
        e.add_term(coeff, arg);
        e
    }

    pub fn ln(arg: impl Into<BigUint>) -> Self {
        LogExpr::term(Rational::one(), arg.into())
    }

    /// `ln(q)` for a positive rational `q`.
    pub fn ln_rational(q: &Rational) -> Self {
        assert!(q.is_positive(), "logarithm of a non-positive rational");
        let num = q.numer().to_biguint().expect("positive");
        let den = q.denom().to_biguint().expect("positive");
        let mut e = LogExpr::ln(num);
        e.add_term(-Rational::one(), den);
        e
    }

    fn add_term(&mut self, coeff: Rational, arg: BigUint) {
        if coeff.is_zero() || arg.is_one() {
            return;
        }
        let entry = self.terms.entry(arg.clone()).or_insert_with(Rational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&arg);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BigUint, &Rational)> {
        self.terms.iter()
    }

    pub fn scaled(&self, factor: &Rational) -> Self {
        let mut out = LogExpr::zero();
        for (a, c) in &self.terms {
            out.add_term(c * factor, a.clone());
        }
        out
    }

    pub fn plus(&self, other: &LogExpr) -> Self {
        let mut out = self.clone();
        for (a, c) in &other.terms {
            out.add_term(c.clone(), a.clone());
        }
        out
    }

    pub fn minus(&self, other: &LogExpr) -> Self {
        self.plus(&other.scaled(&-Rational::one()))
    }

    /// Value with at least `bits` correct fractional bits (up to rounding in
    /// the last guard bits).
    pub fn eval(&self, bits: u64) -> Fixed {
        let w = bits + GUARD_BITS;
        let mut ln2: Option<BigInt> = None;
        let mut acc = BigInt::zero();
        for (a, c) in &self.terms {
            let l = ln_fixed(a, w, &mut ln2);
            acc += (l * c.numer()).div_floor(c.denom());
        }
        Fixed {
            mantissa: acc >> GUARD_BITS,
            frac_bits: bits,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.eval(64).to_f64()
    }

    /// Evaluates several expressions, computing each distinct logarithm once.
    pub fn eval_all(exprs: &[&LogExpr], bits: u64) -> Vec<Fixed> {
        let w = bits + GUARD_BITS;
        let mut ln2: Option<BigInt> = None;
        let mut cache: BTreeMap<&BigUint, BigInt> = BTreeMap::new();
        exprs
            .iter()
            .map(|e| {
                let mut acc = BigInt::zero();
                for (a, c) in &e.terms {
                    let l = cache.entry(a).or_insert_with(|| ln_fixed(a, w, &mut ln2));
                    acc += (&*l * c.numer()).div_floor(c.denom());
                }
                Fixed {
                    mantissa: acc >> GUARD_BITS,
                    frac_bits: bits,
                }
            })
            .collect()
    }
}

/// A binary fixed-point real `mantissa / 2^frac_bits`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fixed {
    mantissa: BigInt,
    frac_bits: u64,
}

impl Fixed {
    pub fn zero(frac_bits: u64) -> Self {
        Fixed {
            mantissa: BigInt::zero(),
            frac_bits,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.mantissa.is_positive()
    }

    pub fn frac_bits(&self) -> u64 {
        self.frac_bits
    }

    pub fn to_f64(&self) -> f64 {
        let shift = self.mantissa.bits().saturating_sub(60);
        let top = (&self.mantissa >> shift).to_f64().unwrap_or(0.0);
        top * 2f64.powi(shift as i32 - self.frac_bits as i32)
    }

    /// `self / other` at the precision of `self`. Panics on division by zero.
    pub fn div(&self, other: &Fixed) -> Fixed {
        assert!(!other.is_zero(), "fixed-point division by zero");
        // (a / 2^p) / (b / 2^q) = (a · 2^q / b) / 2^p
        let num = &self.mantissa << other.frac_bits;
        Fixed {
            mantissa: num.div_floor(&other.mantissa),
            frac_bits: self.frac_bits,
        }
    }

    /// Decimal rendering with `digits` digits after the point, rounded to nearest.
    pub fn to_decimal(&self, digits: u32) -> String {
        let neg = self.mantissa.is_negative();
        let half = if self.frac_bits > 0 {
            BigInt::one() << (self.frac_bits - 1)
        } else {
            BigInt::zero()
        };
        let scaled = (self.mantissa.abs() * BigInt::from(10u32).pow(digits) + half) >> self.frac_bits;
        let s = scaled.to_string();
        let s = format!("{:0>width$}", s, width = digits as usize + 1);
        let (int, frac) = s.split_at(s.len() - digits as usize);
        let sign = if neg { "-" } else { "" };
        if digits == 0 {
            format!("{sign}{int}")
        } else {
            format!("{sign}{int}.{frac}")
        }
    }
}

impl PartialOrd for Fixed {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        let p = self.frac_bits.max(other.frac_bits);
        let a = &self.mantissa << (p - self.frac_bits);
        let b = &other.mantissa << (p - other.frac_bits);
        Some(a.cmp(&b))
    }
}

/// `2·atanh(num/den)` in fixed point with `w` fractional bits.
fn two_atanh(z: &BigInt, w: u64) -> BigInt {
    // z is already scaled by 2^w and |z| < 2^w / 3.
    let z2 = (z * z) >> w;
    let mut power = z.clone();
    let mut acc = BigInt::zero();
    let mut j: u64 = 0;
    while !power.is_zero() {
        acc += &power / BigInt::from(2 * j + 1);
        power = (&power * &z2) >> w;
        j += 1;
    }
    acc << 1
}

/// `ln(a)` scaled by `2^w`, for an integer `a >= 1`.
fn ln_fixed(a: &BigUint, w: u64, ln2_cache: &mut Option<BigInt>) -> BigInt {
    let ln2 = ln2_cache
        .get_or_insert_with(|| two_atanh(&((BigInt::one() << w) / 3u32), w))
        .clone();
    let e = a.bits() - 1;
    let a = BigInt::from_biguint(Sign::Plus, a.clone());
    // mantissa in [1, 2) scaled by 2^w
    let m = if e >= w { a >> (e - w) } else { a << (w - e) };
    let one = BigInt::one() << w;
    // ln m = 2 atanh((m - 1) / (m + 1)), argument below 1/3
    let z = ((&m - &one) << w) / (&m + &one);
    ln2 * BigInt::from(e) + two_atanh(&z, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn small_logs_match_f64() {
        for a in [1u32, 2, 3, 10, 15, 1000, 65535, 1 << 31] {
            let got = LogExpr::ln(BigUint::from(a)).to_f64();
            assert!((got - (a as f64).ln()).abs() < 1e-15, "ln {a}: {got}");
        }
    }

    #[test]
    fn combination_simplifies() {
        let e = LogExpr::ln(6u32)
            .minus(&LogExpr::ln(2u32))
            .minus(&LogExpr::ln(3u32))
            .plus(&LogExpr::ln(6u32).scaled(&rat(0, 1)));
        assert!(e.terms().any(|(a, _)| *a == BigUint::from(6u32)));
        // ln 6 - ln 2 - ln 3 is not simplified symbolically but evaluates to 0.
        assert!(e.eval(200).to_f64().abs() < 1e-50);
        let f = LogExpr::ln(5u32).minus(&LogExpr::ln(5u32));
        assert!(f.is_zero());
    }

    #[test]
    fn ln_rational_and_ratio() {
        // ln(1/15) / ln(1/3)
        let a = LogExpr::ln_rational(&rat(1, 15)).eval(120);
        let b = LogExpr::ln_rational(&rat(1, 3)).eval(120);
        let q = a.div(&b).to_f64();
        assert!((q - 15f64.ln() / 3f64.ln()).abs() < 1e-14);
        assert!(a < b);
    }

    #[test]
    fn decimal_rendering() {
        let ln2 = LogExpr::ln(2u32).eval(bits_for_digits(40));
        assert_eq!(
            ln2.to_decimal(30),
            "0.693147180559945309417232121458"
        );
        let neg = LogExpr::ln_rational(&rat(1, 2)).eval(100);
        assert_eq!(neg.to_decimal(5), "-0.69315");
    }
}
