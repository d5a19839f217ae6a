//! Exact rational scalars.
//!
//! Every coefficient, residue and sign datum in the crate is a [`Rat`]. The
//! type is a thin wrapper over `BigRational` that adds the partial root
//! extraction needed for residue bookkeeping and a stable text format.

use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rat(BigRational);

impl Rat {
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Rat {
        Rat(BigRational::new(num.into(), den.into()))
    }

    pub fn from_int(n: impl Into<BigInt>) -> Rat {
        Rat(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Rat {
        Rat(BigRational::zero())
    }

    pub fn one() -> Rat {
        Rat(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    /// -1, 0 or 1.
    pub fn signum(&self) -> i32 {
        match self.0.numer().sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn abs(&self) -> Rat {
        Rat(self.0.abs())
    }

    pub fn recip(&self) -> Rat {
        assert!(!self.is_zero(), "reciprocal of zero");
        Rat(self.0.recip())
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn to_i64(&self) -> Option<i64> {
        if self.is_integer() {
            self.0.numer().to_i64()
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Integer power; negative exponents invert.
    pub fn pow(&self, e: i64) -> Rat {
        if e >= 0 {
            Rat(num_traits::pow::pow(self.0.clone(), e as usize))
        } else {
            self.recip().pow(-e)
        }
    }

    /// Real n-th root when it is rational. Even roots are the positive root.
    pub fn nth_root(&self, n: u32) -> Result<Rat, Error> {
        assert!(n >= 1, "root index must be positive");
        if n % 2 == 0 && self.is_negative() {
            return Err(Error::EvenRootOfNegative {
                value: self.to_string(),
                n,
            });
        }
        let neg = self.is_negative();
        let a = self.abs();
        let p = exact_int_root(a.numer(), n);
        let q = exact_int_root(a.denom(), n);
        match (p, q) {
            (Some(p), Some(q)) => {
                let r = Rat::new(p, q);
                Ok(if neg { -r } else { r })
            }
            _ => Err(Error::NoRationalRoot {
                value: self.to_string(),
                n,
            }),
        }
    }

    /// Largest h with 2^h dividing the numerator; used on integers.
    pub fn two_adic(&self) -> i64 {
        if self.is_zero() {
            return i64::MAX;
        }
        let num = self.numer().magnitude().trailing_zeros().unwrap_or(0) as i64;
        let den = self.denom().magnitude().trailing_zeros().unwrap_or(0) as i64;
        num - den
    }
}

fn exact_int_root(a: &BigInt, n: u32) -> Option<BigInt> {
    let r = a.nth_root(n);
    for c in [r.clone() - 1, r.clone(), r + 1] {
        if c.sign() != Sign::Minus && num_traits::pow::pow(c.clone(), n as usize) == *a {
            return Some(c);
        }
    }
    None
}

/// Largest h with 2^h | n.
pub fn two_adic_valuation(n: u64) -> u32 {
    assert!(n >= 1, "two-adic valuation of zero");
    n.trailing_zeros()
}

pub fn gcd_i64(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}

pub fn lcm_i64(a: i64, b: i64) -> i64 {
    a.lcm(&b)
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Rat, Error> {
        let t = s.trim();
        let bad = || Error::Parse {
            message: format!("not a rational number: {s:?}"),
            line: 1,
            column: 1,
        };
        let (n, d) = match t.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (t, "1"),
        };
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(Rat::new(n, d))
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            S(String),
            I(i64),
        }
        match Raw::deserialize(d)? {
            Raw::S(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::I(i) => Ok(Rat::from(i)),
        }
    }
}

impl From<i64> for Rat {
    fn from(n: i64) -> Rat {
        Rat::from_int(n)
    }
}

impl From<i32> for Rat {
    fn from(n: i32) -> Rat {
        Rat::from_int(n)
    }
}

impl From<BigInt> for Rat {
    fn from(n: BigInt) -> Rat {
        Rat::from_int(n)
    }
}

impl From<BigRational> for Rat {
    fn from(r: BigRational) -> Rat {
        Rat(r)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $atr:ident, $am:ident) => {
        impl $tr<Rat> for Rat {
            type Output = Rat;
            fn $m(self, o: Rat) -> Rat {
                Rat(self.0.$m(o.0))
            }
        }
        impl<'a> $tr<&'a Rat> for Rat {
            type Output = Rat;
            fn $m(self, o: &'a Rat) -> Rat {
                Rat(self.0.$m(&o.0))
            }
        }
        impl<'a> $tr<Rat> for &'a Rat {
            type Output = Rat;
            fn $m(self, o: Rat) -> Rat {
                Rat((&self.0).$m(o.0))
            }
        }
        impl<'a, 'b> $tr<&'b Rat> for &'a Rat {
            type Output = Rat;
            fn $m(self, o: &'b Rat) -> Rat {
                Rat((&self.0).$m(&o.0))
            }
        }
        impl $atr<Rat> for Rat {
            fn $am(&mut self, o: Rat) {
                self.0.$am(o.0);
            }
        }
        impl<'a> $atr<&'a Rat> for Rat {
            fn $am(&mut self, o: &'a Rat) {
                self.0.$am(&o.0);
            }
        }
    };
}

binop!(Add, add, AddAssign, add_assign);
binop!(Sub, sub, SubAssign, sub_assign);
binop!(Mul, mul, MulAssign, mul_assign);
binop!(Div, div, DivAssign, div_assign);

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl<'a> Neg for &'a Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-&self.0)
    }
}

impl Sum for Rat {
    fn sum<I: Iterator<Item = Rat>>(it: I) -> Rat {
        it.fold(Rat::zero(), |a, b| a + b)
    }
}

impl Product for Rat {
    fn product<I: Iterator<Item = Rat>>(it: I) -> Rat {
        it.fold(Rat::one(), |a, b| a * b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(s: &str) -> Rat {
        s.parse().unwrap()
    }

    #[test]
    fn roots() {
        assert_eq!(r("8").nth_root(3).unwrap(), r("2"));
        assert_eq!(r("4").nth_root(2).unwrap(), r("2"));
        assert_eq!(r("-27/8").nth_root(3).unwrap(), r("-3/2"));
        for n in 1..7 {
            assert_eq!(Rat::one().nth_root(n).unwrap(), Rat::one());
        }
        assert!(matches!(r("2").nth_root(2), Err(Error::NoRationalRoot { .. })));
        assert!(matches!(r("-4").nth_root(2), Err(Error::EvenRootOfNegative { .. })));
    }

    #[test]
    fn two_adic() {
        assert_eq!(two_adic_valuation(1), 0);
        assert_eq!(two_adic_valuation(4), 2);
        assert_eq!(two_adic_valuation(12), 2);
        assert_eq!(r("3/8").two_adic(), -3);
    }

    #[test]
    fn text_round_trip() {
        for s in ["0", "-3", "7/12", "-1/2", "123456789012345678901234567891/7"] {
            assert_eq!(r(s).to_string(), s);
        }
        assert_eq!(r("4/8").to_string(), "1/2");
        assert!("1/0".parse::<Rat>().is_err());
        assert!("x".parse::<Rat>().is_err());
    }

    fn arb_rat() -> impl Strategy<Value = Rat> {
        (-50i64..50, 1i64..20).prop_map(|(n, d)| Rat::new(n, d))
    }

    proptest! {
        #[test]
        fn field_axioms(a in arb_rat(), b in arb_rat(), c in arb_rat()) {
            prop_assert_eq!((&a + &b) + &c, &a + (&b + &c));
            prop_assert_eq!((&a * &b) * &c, &a * (&b * &c));
            prop_assert_eq!(&a * (&b + &c), &a * &b + &a * &c);
            if !a.is_zero() {
                prop_assert_eq!(&a * a.recip(), Rat::one());
            }
            prop_assert_eq!(&a - &a, Rat::zero());
        }

        #[test]
        fn root_powers_back(a in arb_rat(), n in 1u32..6) {
            let p = a.pow(n as i64);
            let root = p.nth_root(n).unwrap();
            prop_assert_eq!(root.pow(n as i64), p);
            if let Ok(q) = a.nth_root(n) {
                prop_assert_eq!(q.pow(n as i64), a);
            }
        }

        #[test]
        fn two_adic_additive(m in 1u64..5000, n in 1u64..5000) {
            prop_assert_eq!(two_adic_valuation(m * n), two_adic_valuation(m) + two_adic_valuation(n));
        }

        #[test]
        fn order_matches_reals(a in arb_rat(), b in arb_rat()) {
            let fa = a.to_f64();
            let fb = b.to_f64();
            if (fa - fb).abs() > 1e-9 {
                prop_assert_eq!(a < b, fa < fb);
            }
        }
    }
}
