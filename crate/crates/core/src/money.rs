//! Exact rational money.
//!
//! Every price, value and utility in the crate is a [`Money`]: an arbitrary
//! precision rational. Nothing is ever rounded. Text form is a decimal string
//! when the denominator has only the prime factors 2 and 5 (`"12.5"`,
//! `"-0.25"`), and a fraction `"p/q"` otherwise, since values such as a third
//! of a rent have no finite decimal expansion. Both forms parse back exactly.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Money(BigRational);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid money literal {0:?}: expected a decimal like \"12.50\" or a fraction like \"1/3\"")]
pub struct ParseMoneyError(pub String);

impl Money {
    pub fn zero() -> Self {
        Money(BigRational::zero())
    }

    pub fn one() -> Self {
        Money(BigRational::one())
    }

    pub fn from_integer(v: i64) -> Self {
        Money(BigRational::from_integer(BigInt::from(v)))
    }

    /// `numer / denom`. Panics on a zero denominator.
    pub fn ratio(numer: i64, denom: i64) -> Self {
        Money(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_rational(r: BigRational) -> Self {
        Money(r)
    }

    /// Exact value of a finite float (every finite `f64` is a dyadic rational).
    pub fn from_f64_exact(v: f64) -> Option<Self> {
        BigRational::from_float(v).map(Money)
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn into_rational(self) -> BigRational {
        self.0
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
        Money(self.0.abs())
    }

    pub fn recip(&self) -> Self {
        Money(self.0.recip())
    }

    /// Integer power; negative exponents invert.
    pub fn pow(&self, exp: i32) -> Self {
        Money(num_traits::Pow::pow(&self.0, exp))
    }

    pub fn max_of(a: Money, b: Money) -> Money {
        if a >= b {
            a
        } else {
            b
        }
    }

    pub fn min_of(a: Money, b: Money) -> Money {
        if a <= b {
            a
        } else {
            b
        }
    }

    /// Lossy conversion for reporting only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Whether the value has a finite decimal expansion.
    pub fn is_decimal(&self) -> bool {
        decimal_scale(self.0.denom()).is_some()
    }
}

/// Number of decimal places needed for `1/denom`, if finite.
fn decimal_scale(denom: &BigInt) -> Option<u32> {
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut d = denom.clone();
    let (mut twos, mut fives) = (0u32, 0u32);
    while d.is_even() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if d.is_one() {
        Some(twos.max(fives))
    } else {
        None
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let numer = self.0.numer();
        let denom = self.0.denom();
        if denom.is_one() {
            return write!(f, "{numer}");
        }
        match decimal_scale(denom) {
            Some(scale) => {
                let scaled = numer * BigInt::from(10u32).pow(scale) / denom;
                let sign = if scaled.sign() == Sign::Minus { "-" } else { "" };
                let digits = scaled.abs().to_string();
                let width = scale as usize + 1;
                let digits = format!("{digits:0>width$}");
                let (int, frac) = digits.split_at(digits.len() - scale as usize);
                write!(f, "{sign}{int}.{frac}")
            }
            None => write!(f, "{numer}/{denom}"),
        }
    }
}

impl fmt::Debug for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Money {
    type Err = ParseMoneyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseMoneyError(s.to_string());
        let t = s.trim();
        if t.is_empty() {
            return Err(err());
        }
        if let Some((n, d)) = t.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| err())?;
            let d: BigInt = d.trim().parse().map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            return Ok(Money(BigRational::new(n, d)));
        }
        let (negative, body) = match t.as_bytes()[0] {
            b'-' => (true, &t[1..]),
            b'+' => (false, &t[1..]),
            _ => (false, t),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(err());
        }
        if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let digits = format!("{int}{frac}");
        let numer: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().map_err(|_| err())?
        };
        let denom = BigInt::from(10u32).pow(frac.len() as u32);
        let value = BigRational::new(numer, denom);
        Ok(Money(if negative { -value } else { value }))
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<i64> for Money {
    fn from(v: i64) -> Self {
        Money::from_integer(v)
    }
}

impl From<BigRational> for Money {
    fn from(r: BigRational) -> Self {
        Money(r)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait<Money> for Money {
            type Output = Money;
            fn $method(self, rhs: Money) -> Money {
                Money(self.0.$method(rhs.0))
            }
        }
        impl $trait<&Money> for Money {
            type Output = Money;
            fn $method(self, rhs: &Money) -> Money {
                Money(self.0.$method(&rhs.0))
            }
        }
        impl $trait<Money> for &Money {
            type Output = Money;
            fn $method(self, rhs: Money) -> Money {
                Money((&self.0).$method(rhs.0))
            }
        }
        impl $trait<&Money> for &Money {
            type Output = Money;
            fn $method(self, rhs: &Money) -> Money {
                Money((&self.0).$method(&rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-self.0)
    }
}

impl Neg for &Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-&self.0)
    }
}

impl AddAssign<&Money> for Money {
    fn add_assign(&mut self, rhs: &Money) {
        self.0 += &rhs.0;
    }
}

impl AddAssign<Money> for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl SubAssign<&Money> for Money {
    fn sub_assign(&mut self, rhs: &Money) {
        self.0 -= &rhs.0;
    }
}

impl SubAssign<Money> for Money {
    fn sub_assign(&mut self, rhs: Money) {
        self.0 -= rhs.0;
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Money> for Money {
    fn sum<I: Iterator<Item = &'a Money>>(iter: I) -> Money {
        iter.fold(Money::zero(), |acc, x| acc + x)
    }
}

/// Shorthand for integer literals in tests and fixtures.
pub fn money(v: i64) -> Money {
    Money::from_integer(v)
}
