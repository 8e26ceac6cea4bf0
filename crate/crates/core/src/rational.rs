//! Exact rationals, primes and p-adic valuations.
//!
//! [`Rational`] is always stored reduced with a positive denominator, so the
//! height of a value can be read off its fields directly.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A rational prime small enough for the machine-word counting kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prime(u64);

impl Prime {
    pub fn new(p: u64) -> Result<Self> {
        if p > u32::MAX as u64 {
            return Err(Error::PrimeTooLarge(p));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Prime(p))
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    /// `p^k` as an exact rational; `k` may be negative.
    pub fn pow(self, k: i64) -> Rational {
        let base = BigInt::from(self.0).pow(k.unsigned_abs() as u32);
        if k >= 0 {
            Rational::from_integer(base)
        } else {
            Rational::from_big(BigRational::new_raw(BigInt::one(), base))
        }
    }

    pub fn pow_int(self, k: u32) -> BigInt {
        BigInt::from(self.0).pow(k)
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Prime {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u64(self.0)
    }
}

impl<'de> Deserialize<'de> for Prime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let p = u64::deserialize(d)?;
        Prime::new(p).map_err(serde::de::Error::custom)
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// A p-adic valuation, with `Infinity` reserved for the valuation of zero.
///
/// The derived ordering puts `Infinity` above every finite value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtendedValuation {
    Finite(i64),
    Infinity,
}

impl ExtendedValuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            ExtendedValuation::Finite(v) => Some(v),
            ExtendedValuation::Infinity => None,
        }
    }

    pub fn is_at_least(self, e: i64) -> bool {
        self >= ExtendedValuation::Finite(e)
    }
}

impl fmt::Display for ExtendedValuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedValuation::Finite(v) => write!(f, "{v}"),
            ExtendedValuation::Infinity => f.write_str("inf"),
        }
    }
}

/// A reduced fraction `num/den` with `den >= 1`; zero is `0/1`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rational(BigRational);

impl Rational {
    /// Reduces `num/den`, moving the sign to the numerator.
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Self> {
        let den = den.into();
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(Rational(BigRational::new(num.into(), den)))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub(crate) fn from_big(r: BigRational) -> Self {
        Rational(r)
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
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

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    /// Largest integer `<= self`.
    pub fn floor(&self) -> BigInt {
        self.numer().div_floor(self.denom())
    }

    /// `max(|num|, den)`, with `H(0) = 1`.
    pub fn height(&self) -> BigUint {
        let n = self.numer().magnitude();
        let d = self.denom().magnitude();
        if n > d {
            n.clone()
        } else {
            d.clone()
        }
    }

    /// `(num, den)` as machine integers, when both fit.
    pub fn to_i128_pair(&self) -> Option<(i128, i128)> {
        Some((self.numer().to_i128()?, self.denom().to_i128()?))
    }

    /// Lossy conversion for display only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

/// Free-function constructor matching the rest of the crate's API.
pub fn make_rational(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Rational> {
    Rational::new(num, den)
}

pub fn height(r: &Rational) -> BigUint {
    r.height()
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Rational::from_integer(n)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident) => {
        impl $tr for Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                Rational((self.0).$m(rhs.0))
            }
        }
        impl<'a> $tr<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $m(self, rhs: &'a Rational) -> Rational {
                Rational((&self.0).$m(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

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

impl Rational {
    /// Exact division; `None` when dividing by zero.
    pub fn checked_div(&self, rhs: &Rational) -> Option<Rational> {
        if rhs.is_zero() {
            None
        } else {
            Some(Rational(&self.0 / &rhs.0))
        }
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom().is_one() {
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

fn parse_int(what: &'static str, full: &str, s: &str) -> Result<BigInt> {
    let s = s.trim();
    let (neg, digits) = match s.strip_prefix('-').or_else(|| s.strip_prefix('\u{2212}')) {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::parse(what, full, "expected decimal digits"));
    }
    let n: BigInt = digits
        .parse()
        .map_err(|e: num_bigint::ParseBigIntError| Error::parse(what, full, e.to_string()))?;
    Ok(if neg { -n } else { n })
}

/// Accepts `a/b` or `a`, with an optional leading minus (ASCII or U+2212).
impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('/') {
            Some((n, d)) => {
                let n = parse_int("rational", s, n)?;
                let d = parse_int("rational", s, d)?;
                Rational::new(n, d)
            }
            None => Ok(Rational::from_integer(parse_int("rational", s, s)?)),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Exponent of `p` in a nonzero integer.
pub fn vp_bigint(p: Prime, n: &BigInt) -> u64 {
    debug_assert!(!n.is_zero());
    if p.get() == 2 {
        return n.trailing_zeros().unwrap_or(0);
    }
    if let Some(small) = n.to_i128() {
        return vp_i128(p.get(), small);
    }
    let pb = BigUint::from(p.get());
    let mut m = n.magnitude().clone();
    let mut k = 0;
    loop {
        let (q, r) = m.div_rem(&pb);
        if !r.is_zero() {
            return k;
        }
        m = q;
        k += 1;
    }
}

#[inline]
pub fn vp_u64(p: u64, mut n: u64) -> u64 {
    debug_assert!(n != 0);
    let mut k = 0;
    while n.is_multiple_of(p) {
        n /= p;
        k += 1;
    }
    k
}

#[inline]
pub fn vp_i128(p: u64, n: i128) -> u64 {
    debug_assert!(n != 0);
    let p = p as i128;
    let mut n = n;
    let mut k = 0;
    while n % p == 0 {
        n /= p;
        k += 1;
    }
    k
}

/// `v_p(r)`, computed as `v_p(num) - v_p(den)` on the reduced form.
pub fn valuation(p: Prime, r: &Rational) -> ExtendedValuation {
    if r.is_zero() {
        return ExtendedValuation::Infinity;
    }
    let up = vp_bigint(p, r.numer()) as i64;
    let down = vp_bigint(p, r.denom()) as i64;
    ExtendedValuation::Finite(up - down)
}

/// `p^k` as a big integer, for `k >= 0`.
pub(crate) fn big_pow(p: Prime, k: i64) -> BigInt {
    debug_assert!(k >= 0);
    BigInt::from(p.get()).pow(k as u32)
}

/// Inverse of `a` modulo `m`; requires `gcd(a, m) = 1`.
pub(crate) fn mod_inverse(a: &BigInt, m: &BigInt) -> BigInt {
    let g = a.extended_gcd(m);
    debug_assert!(g.gcd.is_one() || g.gcd == -BigInt::one());
    let inv = g.x * g.gcd.signum();
    inv.mod_floor(m)
}
