//! Exact rational numbers backed by arbitrary-precision integers.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::{BigRational, Ratio};
use num::traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub};
use num::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ParseRationalError;

/// A rational number, always kept in lowest terms with a positive denominator.
///
/// Values whose numerator and denominator fit in a machine word use checked `i64`
/// arithmetic and fall back to arbitrary precision on overflow.
#[derive(Clone)]
pub struct Rational(Repr);

#[derive(Clone)]
enum Repr {
    Small(Ratio<i64>),
    Big(BigRational),
}

fn small_ok(n: i64, d: i64) -> bool {
    n != i64::MIN && d > 0
}

impl Rational {
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rational::from_ratio(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_int(n: i64) -> Self {
        if n == i64::MIN {
            return Rational(Repr::Big(BigRational::from_integer(BigInt::from(n))));
        }
        Rational(Repr::Small(Ratio::from_integer(n)))
    }

    pub fn from_big(numer: BigInt, denom: BigInt) -> Result<Self, ParseRationalError> {
        if denom.is_zero() {
            return Err(ParseRationalError::DivisionByZero);
        }
        Ok(Rational::from_ratio(BigRational::new(numer, denom)))
    }

    fn from_ratio(r: BigRational) -> Self {
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) if small_ok(n, d) => Rational(Repr::Small(Ratio::new_raw(n, d))),
            _ => Rational(Repr::Big(r)),
        }
    }

    fn from_small(r: Ratio<i64>) -> Option<Self> {
        small_ok(*r.numer(), *r.denom()).then_some(Rational(Repr::Small(r)))
    }

    pub fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(r) => {
                BigRational::new_raw(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
            }
            Repr::Big(r) => r.clone(),
        }
    }

    pub fn zero() -> Self {
        Rational::from_int(0)
    }

    pub fn one() -> Self {
        Rational::from_int(1)
    }

    pub fn half() -> Self {
        Rational::new(1, 2)
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small(r) => BigInt::from(*r.numer()),
            Repr::Big(r) => r.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small(r) => BigInt::from(*r.denom()),
            Repr::Big(r) => r.denom().clone(),
        }
    }

    /// Numerator and denominator when both fit in `i64`.
    pub fn to_i64_pair(&self) -> Option<(i64, i64)> {
        match &self.0 {
            Repr::Small(r) => Some((*r.numer(), *r.denom())),
            Repr::Big(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => r.is_zero(),
            Repr::Big(r) => r.is_zero(),
        }
    }

    pub fn is_positive(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => r.is_positive(),
            Repr::Big(r) => r.is_positive(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => r.is_negative(),
            Repr::Big(r) => r.is_negative(),
        }
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => r.is_integer(),
            Repr::Big(r) => r.is_integer(),
        }
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small(r) => *r.numer() as f64 / *r.denom() as f64,
            Repr::Big(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Canonical wire form `p/q`, used in every JSON document.
    pub fn to_fraction_string(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }

    pub fn max_of<'a, I: IntoIterator<Item = &'a Rational>>(items: I) -> Option<Rational> {
        items.into_iter().max().cloned()
    }

    pub fn min_of<'a, I: IntoIterator<Item = &'a Rational>>(items: I) -> Option<Rational> {
        items.into_iter().min().cloned()
    }
}

impl Default for Rational {
    fn default() -> Self {
        Rational::zero()
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => a == b,
            // both representations are canonical, so a mixed pair is never equal
            (Repr::Big(a), Repr::Big(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Rational {}

impl std::hash::Hash for Rational {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        match &self.0 {
            Repr::Small(r) => {
                0u8.hash(state);
                r.hash(state)
            }
            Repr::Big(r) => {
                1u8.hash(state);
                r.hash(state)
            }
        }
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => {
                let lhs = *a.numer() as i128 * *b.denom() as i128;
                let rhs = *b.numer() as i128 * *a.denom() as i128;
                lhs.cmp(&rhs)
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_int(text: &str) -> Result<BigInt, ParseRationalError> {
    let digits = text.strip_prefix(['+', '-']).unwrap_or(text);
    if digits.is_empty() || !digits.bytes().all(|c| c.is_ascii_digit()) {
        return Err(ParseRationalError::Malformed(text.to_string()));
    }
    text.parse::<BigInt>()
        .map_err(|_| ParseRationalError::Malformed(text.to_string()))
}

impl FromStr for Rational {
    type Err = ParseRationalError;

    /// Accepts `p/q`, a bare integer, or a terminating decimal such as `-0.75`.
    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        let text = raw.trim();
        if text.is_empty() {
            return Err(ParseRationalError::Empty);
        }
        if let Some((p, q)) = text.split_once('/') {
            let p = parse_int(p.trim())?;
            let q_text = q.trim();
            if q_text.starts_with(['+', '-']) {
                return Err(ParseRationalError::Malformed(text.to_string()));
            }
            let q = parse_int(q_text)?;
            return Rational::from_big(p, q);
        }
        if let Some((int_part, frac_part)) = text.split_once('.') {
            let negative = int_part.starts_with('-');
            let int_digits = int_part.strip_prefix(['+', '-']).unwrap_or(int_part);
            if (int_digits.is_empty() && frac_part.is_empty())
                || !int_digits.bytes().all(|c| c.is_ascii_digit())
                || !frac_part.bytes().all(|c| c.is_ascii_digit())
            {
                return Err(ParseRationalError::Malformed(text.to_string()));
            }
            let mut all_digits = String::with_capacity(int_digits.len() + frac_part.len());
            all_digits.push_str(int_digits);
            all_digits.push_str(frac_part);
            let mut numer: BigInt = all_digits
                .parse()
                .map_err(|_| ParseRationalError::Malformed(text.to_string()))?;
            if negative {
                numer = -numer;
            }
            let denom = num::pow(BigInt::from(10u32), frac_part.len());
            return Rational::from_big(numer, denom);
        }
        Ok(Rational::from_ratio(BigRational::from_integer(parse_int(
            text,
        )?)))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_fraction_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_int(n)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &rhs.0) {
                    if let Some(r) = a.$checked(b).and_then(Rational::from_small) {
                        return r;
                    }
                }
                Rational::from_ratio(self.to_big().$method(rhs.to_big()))
            }
        }
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                (&self).$method(rhs)
            }
        }
        impl $trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);
binop!(Div, div, checked_div);

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        match &self.0 {
            // numerator is never i64::MIN, so negation cannot overflow
            Repr::Small(r) => Rational(Repr::Small(-*r)),
            Repr::Big(r) => Rational::from_ratio(-r),
        }
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        -&self
    }
}

impl std::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

impl<'a> std::iter::Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

/// Exact three-way comparison helper.
pub fn cmp(a: &Rational, b: &Rational) -> Ordering {
    a.cmp(b)
}

/// Shorthand used throughout the authored tables.
pub fn q(numer: i64, denom: i64) -> Rational {
    Rational::new(numer, denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_in_lowest_terms() {
        assert_eq!("3/6".parse::<Rational>().unwrap(), q(1, 2));
        assert_eq!("-4/8".parse::<Rational>().unwrap(), q(-1, 2));
    }

    #[test]
    fn parses_decimal_exactly() {
        assert_eq!("0.75".parse::<Rational>().unwrap(), q(3, 4));
        assert_eq!("0.25".parse::<Rational>().unwrap(), q(1, 4));
        assert_eq!("-1.5".parse::<Rational>().unwrap(), q(-3, 2));
        assert_eq!(".5".parse::<Rational>().unwrap(), q(1, 2));
        assert_eq!("0.1".parse::<Rational>().unwrap(), q(1, 10));
    }

    #[test]
    fn zero_denominator_is_an_error() {
        assert_eq!(
            "1/0".parse::<Rational>(),
            Err(ParseRationalError::DivisionByZero)
        );
    }

    #[test]
    fn rejects_garbage() {
        for bad in [
            "", "abc", "1/", "/2", "1.2.3", "1/-2", "--1", ".", "1e3", "1/2/3",
        ] {
            assert!(bad.parse::<Rational>().is_err(), "{bad:?} parsed");
        }
    }

    #[test]
    fn display_and_wire_forms() {
        assert_eq!(q(3, 1).to_string(), "3");
        assert_eq!(q(-3, 4).to_string(), "-3/4");
        assert_eq!(q(3, 1).to_fraction_string(), "3/1");
        assert_eq!(Rational::zero().to_fraction_string(), "0/1");
    }

    #[test]
    fn overflow_promotes_to_big() {
        let big = Rational::from_int(i64::MAX);
        let sum = &big + &big;
        assert_eq!(sum.to_fraction_string(), "18446744073709551614/1");
        assert_eq!(&sum - &big, big);
        let tiny = q(1, i64::MAX);
        let prod = &tiny * &tiny;
        assert!(prod.is_positive());
        assert_eq!(
            prod * Rational::from_int(i64::MAX) * Rational::from_int(i64::MAX),
            Rational::one()
        );
        assert_eq!(-Rational::from_int(i64::MIN), &big + Rational::one());
        assert!(Rational::from_int(i64::MIN) < -&big);
    }

    #[test]
    fn mixed_comparisons() {
        let big = Rational::from_int(i64::MAX) + Rational::one();
        assert!(big > Rational::from_int(i64::MAX));
        assert!(q(-1, 3) < q(-1, 4));
        assert_eq!(q(2, 4), q(1, 2));
    }

    #[test]
    fn arithmetic_is_exact() {
        let third = q(1, 3);
        let sum = &third + &third + &third;
        assert_eq!(sum, Rational::one());
        assert_eq!(q(1, 2) * q(2, 3), q(1, 3));
        assert_eq!(q(1, 2) / q(1, 4), q(2, 1));
        assert_eq!(-q(1, 2) - q(1, 2), q(-1, 1));
    }
}
