//! Exact rational scalars.
//!
//! Every number the checker touches is a [`Rational`]: tableau entries, bounds,
//! Farkas multipliers and derived bounds. There is no conversion to or from
//! floating point in this crate.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("division by zero")]
    DivisionByZero,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational literal {literal:?}: {reason}")]
pub struct ParseRationalError {
    pub literal: String,
    pub reason: &'static str,
}

/// Arbitrary-precision rational in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn from_integer(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// Builds `numer / denom`, reducing to canonical form.
    pub fn new(numer: i64, denom: i64) -> Result<Self, ArithError> {
        Self::from_bigints(BigInt::from(numer), BigInt::from(denom))
    }

    pub fn from_bigints(numer: BigInt, denom: BigInt) -> Result<Self, ArithError> {
        if denom.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        Ok(Rational(BigRational::new(numer, denom)))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn checked_div(&self, rhs: &Rational) -> Result<Rational, ArithError> {
        if rhs.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        Ok(Rational(&self.0 / &rhs.0))
    }

    pub fn recip(&self) -> Result<Rational, ArithError> {
        Rational::one().checked_div(self)
    }

    pub fn compare(&self, other: &Rational) -> Ordering {
        self.cmp(other)
    }

    pub fn min_of(a: Rational, b: Rational) -> Rational {
        if b < a {
            b
        } else {
            a
        }
    }

    pub fn max_of(a: Rational, b: Rational) -> Rational {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Rational(BigRational::from_integer(n))
    }
}

/// Canonical `p/q` form; integers print as `p/1`.
impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Accepts an optional sign followed by an integer (`-3`), a decimal (`0.25`,
/// `.5`, `7.`) or a fraction (`-3/4`). Decimals are read exactly.
impl FromStr for Rational {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason| ParseRationalError {
            literal: s.to_string(),
            reason,
        };
        let t = s.trim();
        if t.is_empty() {
            return Err(err("empty"));
        }
        let (negative, body) = match t.as_bytes()[0] {
            b'-' => (true, &t[1..]),
            b'+' => (false, &t[1..]),
            _ => (false, t),
        };
        let value = if let Some((p, q)) = body.split_once('/') {
            let p = parse_digits(p).ok_or_else(|| err("bad numerator"))?;
            let q = parse_digits(q).ok_or_else(|| err("bad denominator"))?;
            if q.is_zero() {
                return Err(err("zero denominator"));
            }
            BigRational::new(p, q)
        } else if let Some((int, frac)) = body.split_once('.') {
            if int.is_empty() && frac.is_empty() {
                return Err(err("no digits"));
            }
            let int_part = if int.is_empty() {
                BigInt::zero()
            } else {
                parse_digits(int).ok_or_else(|| err("bad integer part"))?
            };
            let frac_part = if frac.is_empty() {
                BigInt::zero()
            } else {
                parse_digits(frac).ok_or_else(|| err("bad fractional part"))?
            };
            let scale = num_traits::pow(BigInt::from(10u8), frac.len());
            BigRational::new(int_part * &scale + frac_part, scale)
        } else {
            BigRational::from_integer(parse_digits(body).ok_or_else(|| err("bad integer"))?)
        };
        Ok(Rational(if negative { -value } else { value }))
    }
}

fn parse_digits(s: &str) -> Option<BigInt> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(&self.0 $op &rhs.0)
            }
        }
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0 $op rhs.0)
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(self.0 $op &rhs.0)
            }
        }
        impl $trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(&self.0 $op rhs.0)
            }
        }
    };
}

forward_binop!(Add, add, +);
forward_binop!(Sub, sub, -);
forward_binop!(Mul, mul, *);

/// Panics on a zero divisor; use [`Rational::checked_div`] when the divisor
/// comes from untrusted input.
impl Div<&Rational> for &Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        self.checked_div(rhs).expect("division by zero")
    }
}

impl Div<Rational> for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        &self / &rhs
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl AddAssign<Rational> for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        self.0 += rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_integer::Integer;
    use proptest::prelude::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn fraction_addition_is_exact() {
        assert_eq!(q("1/3") + q("1/6"), q("1/2"));
    }

    #[test]
    fn construction_normalizes() {
        let r = Rational::new(2, 4).unwrap();
        assert_eq!(r.to_string(), "1/2");
        let r = Rational::new(3, -6).unwrap();
        assert_eq!(r.to_string(), "-1/2");
        assert_eq!(Rational::new(0, -7).unwrap().to_string(), "0/1");
    }

    #[test]
    fn division_by_zero_is_an_error() {
        assert_eq!(
            q("1").checked_div(&Rational::zero()),
            Err(ArithError::DivisionByZero)
        );
        assert_eq!(Rational::new(1, 0), Err(ArithError::DivisionByZero));
        assert!("1/0".parse::<Rational>().is_err());
    }

    #[test]
    fn ordering() {
        assert_eq!(q("-1/2").compare(&Rational::zero()), Ordering::Less);
        assert_eq!(q("1/3").compare(&q("2/6")), Ordering::Equal);
        assert_eq!(q("7/10").compare(&q("0.7")), Ordering::Equal);
    }

    #[test]
    fn literal_forms() {
        assert_eq!(q("0.1"), Rational::new(1, 10).unwrap());
        assert_eq!(q("-2.50"), Rational::new(-5, 2).unwrap());
        assert_eq!(q("+.5"), Rational::new(1, 2).unwrap());
        assert_eq!(q("3."), Rational::from_integer(3));
        assert_eq!(q("-12"), Rational::from_integer(-12));
        assert_eq!(q(" 4/6 "), Rational::new(2, 3).unwrap());
        for bad in ["", "-", "1e5", "1/", "/2", "1.2.3", "--1", "a", "1/-2", ".", "0x10"] {
            assert!(bad.parse::<Rational>().is_err(), "{bad:?} should be rejected");
        }
    }

    #[test]
    fn huge_values_round_trip() {
        let s = "-123456789012345678901234567890/98765432109876543210987654321";
        let r = q(s);
        assert_eq!(q(&r.to_string()), r);
    }

    fn arb_big_rational() -> impl Strategy<Value = Rational> {
        (any::<i128>(), 1..u64::MAX).prop_map(|(n, d)| {
            Rational::from_bigints(BigInt::from(n), BigInt::from(d)).unwrap()
        })
    }

    fn arb_small_rational() -> impl Strategy<Value = Rational> {
        (-50i64..=50, 1i64..=12).prop_map(|(n, d)| Rational::new(n, d).unwrap())
    }

    fn is_canonical(r: &Rational) -> bool {
        r.denom() > &BigInt::zero() && r.numer().gcd(r.denom()) == BigInt::one()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn add_then_sub_round_trips(a in arb_big_rational(), b in arb_big_rational()) {
            let r = &(&a + &b) - &b;
            prop_assert_eq!(r, a);
        }

        #[test]
        fn results_stay_canonical(a in arb_big_rational(), b in arb_big_rational()) {
            prop_assert!(is_canonical(&(&a + &b)));
            prop_assert!(is_canonical(&(&a - &b)));
            prop_assert!(is_canonical(&(&a * &b)));
            if !b.is_zero() {
                prop_assert!(is_canonical(&(&a / &b)));
            }
        }

        #[test]
        fn field_axioms(a in arb_small_rational(), b in arb_small_rational(), c in arb_small_rational()) {
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a + &(-&a), Rational::zero());
            if !a.is_zero() {
                prop_assert_eq!(&a * &a.recip().unwrap(), Rational::one());
            }
        }

        #[test]
        fn display_parse_preserves_value(a in arb_big_rational()) {
            prop_assert_eq!(a.to_string().parse::<Rational>().unwrap(), a);
        }

        #[test]
        fn decimal_literals_are_exact(int in 0u32..100_000, frac in "[0-9]{1,12}") {
            let text = format!("{int}.{frac}");
            let parsed: Rational = text.parse().unwrap();
            let scale = num_traits::pow(BigInt::from(10), frac.len());
            let expected = Rational::from_bigints(
                BigInt::from(int) * &scale + frac.parse::<BigInt>().unwrap(),
                scale,
            ).unwrap();
            prop_assert_eq!(&parsed, &expected);
            prop_assert_eq!(parsed.to_string().parse::<Rational>().unwrap(), expected);
        }
    }
}
