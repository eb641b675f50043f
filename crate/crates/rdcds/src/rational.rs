//! Exact rational arithmetic used for costs and bounds.
//!
//! Backed by arbitrary-precision integers so that LP pivots and cost
//! comparisons never round. Values are kept normalized (reduced, positive
//! denominator) and render as `"num/den"` in reports.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rat(BigRational);

impl Rat {
    pub fn zero() -> Self {
        Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        Rat(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Rat(BigRational::from_integer(BigInt::from(n)))
    }

    /// Builds `num/den`, reduced. Errors if `den` is zero.
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::DivideByZero);
        }
        Ok(Rat(BigRational::new(BigInt::from(num), BigInt::from(den))))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Rat::new(num, den).expect("nonzero denominator")
    }

    pub fn checked_div(&self, rhs: &Rat) -> Result<Rat> {
        if rhs.0.is_zero() {
            return Err(Error::DivideByZero);
        }
        Ok(Rat(&self.0 / &rhs.0))
    }

    pub fn recip(&self) -> Result<Rat> {
        Rat::one().checked_div(self)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn min(self, other: Rat) -> Rat {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// Parses `"num/den"` or a bare integer.
    pub fn parse(text: &str) -> Result<Rat> {
        let parse_int = |s: &str| -> Result<BigInt> {
            s.trim().parse::<BigInt>().map_err(|_| Error::InvalidParams(format!("bad rational: {text:?}")))
        };
        match text.split_once('/') {
            Some((n, d)) => {
                let den = parse_int(d)?;
                if den.is_zero() {
                    return Err(Error::DivideByZero);
                }
                Ok(Rat(BigRational::new(parse_int(n)?, den)))
            }
            None => Ok(Rat(BigRational::from_integer(parse_int(text)?))),
        }
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Add for Rat {
    type Output = Rat;
    fn add(self, rhs: Rat) -> Rat {
        Rat(self.0 + rhs.0)
    }
}

impl<'a> Add<&'a Rat> for Rat {
    type Output = Rat;
    fn add(self, rhs: &Rat) -> Rat {
        Rat(self.0 + &rhs.0)
    }
}

impl Sub for Rat {
    type Output = Rat;
    fn sub(self, rhs: Rat) -> Rat {
        Rat(self.0 - rhs.0)
    }
}

impl<'a> Sub<&'a Rat> for Rat {
    type Output = Rat;
    fn sub(self, rhs: &Rat) -> Rat {
        Rat(self.0 - &rhs.0)
    }
}

impl Mul for Rat {
    type Output = Rat;
    fn mul(self, rhs: Rat) -> Rat {
        Rat(self.0 * rhs.0)
    }
}

impl<'a> Mul<&'a Rat> for &'a Rat {
    type Output = Rat;
    fn mul(self, rhs: &Rat) -> Rat {
        Rat(&self.0 * &rhs.0)
    }
}

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl AddAssign<&Rat> for Rat {
    fn add_assign(&mut self, rhs: &Rat) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Rat> for Rat {
    fn sub_assign(&mut self, rhs: &Rat) {
        self.0 -= &rhs.0;
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&format!("{}/{}", self.0.numer(), self.0.denom()))
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Rat::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalization() {
        assert_eq!(Rat::ratio(2, 4), Rat::ratio(1, 2));
        assert_eq!(Rat::ratio(-1, -2), Rat::ratio(1, 2));
        assert_eq!(Rat::ratio(1, -2), Rat::ratio(-1, 2));
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(Rat::ratio(5, 2) - Rat::ratio(1, 4), Rat::ratio(9, 4));
        assert_eq!(Rat::from_int(2) - Rat::ratio(1, 3), Rat::ratio(5, 3));
        assert_eq!(Rat::ratio(2, 3) * Rat::ratio(9, 4), Rat::ratio(3, 2) * Rat::one());
    }

    #[test]
    fn division_by_zero_is_an_error() {
        assert_eq!(Rat::new(1, 0), Err(Error::DivideByZero));
        assert_eq!(Rat::one().checked_div(&Rat::zero()), Err(Error::DivideByZero));
    }

    #[test]
    fn display_and_parse_round_trip() {
        for r in [Rat::ratio(5, 3), Rat::ratio(-7, 2), Rat::from_int(4), Rat::zero()] {
            assert_eq!(Rat::parse(&r.to_string()).unwrap(), r);
        }
        assert_eq!(Rat::parse("9/4").unwrap(), Rat::ratio(9, 4));
    }

    #[test]
    fn serde_uses_num_den_strings() {
        let json = serde_json::to_string(&Rat::ratio(5, 3)).unwrap();
        assert_eq!(json, "\"5/3\"");
        let back: Rat = serde_json::from_str(&json).unwrap();
        assert_eq!(back, Rat::ratio(5, 3));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn add_then_sub_is_exact(an in -1000i64..1000, ad in 1i64..100, bn in -1000i64..1000, bd in 1i64..100) {
            let a = Rat::ratio(an, ad);
            let b = Rat::ratio(bn, bd);
            prop_assert_eq!((a.clone() + b.clone()) - b, a);
        }

        #[test]
        fn multiplication_commutes(an in -100i64..100, ad in 1i64..50, bn in -100i64..100, bd in 1i64..50) {
            let a = Rat::ratio(an, ad);
            let b = Rat::ratio(bn, bd);
            prop_assert_eq!(a.clone() * b.clone(), b * a);
        }
    }
}
