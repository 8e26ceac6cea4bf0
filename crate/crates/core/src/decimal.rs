//! Deterministic high-precision decimals.
//!
//! [`Fixed`] is a fixed-point number with 70 fractional digits used for the
//! few irrational quantities the reports need (`zeta(2)`, `ln T`).
//! [`Decimal`] is the rendered form: a value rounded to a fixed number of
//! significant digits, which is what reports store and serialize. No machine
//! floats are involved, so reports are bit-for-bit reproducible.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::Rational;

const SCALE_DIGITS: u32 = 70;

/// Significant digits used for report fields.
pub const REPORT_DIGITS: u32 = 15;

/// `zeta(2) = pi^2 / 6` to 60 significant digits.
pub const ZETA2_DIGITS: &str = "1.64493406684822643647241516664602518921894990120679843773556";

fn scale() -> &'static BigInt {
    static SCALE: OnceLock<BigInt> = OnceLock::new();
    SCALE.get_or_init(|| BigInt::from(10u32).pow(SCALE_DIGITS))
}

/// Divides rounding half away from zero.
fn div_round(n: &BigInt, d: &BigInt) -> BigInt {
    debug_assert!(d.is_positive());
    let (q, r) = n.abs().div_rem(d);
    let q = if r * 2 >= *d { q + 1 } else { q };
    if n.is_negative() {
        -q
    } else {
        q
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fixed(BigInt);

impl Fixed {
    pub fn zero() -> Self {
        Fixed(BigInt::zero())
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Fixed(n.into() * scale())
    }

    pub fn from_rational(r: &Rational) -> Self {
        Fixed(div_round(&(r.numer() * scale()), r.denom()))
    }

    pub fn abs(&self) -> Self {
        Fixed(self.0.abs())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn div(&self, rhs: &Fixed) -> Option<Fixed> {
        if rhs.0.is_zero() {
            return None;
        }
        let num = &self.0 * scale();
        let q = if rhs.0.is_negative() {
            -div_round(&num, &-&rhs.0)
        } else {
            div_round(&num, &rhs.0)
        };
        Some(Fixed(q))
    }

    /// Exact rational value of the fixed-point representation.
    pub fn to_rational(&self) -> Rational {
        Rational::new(self.0.clone(), scale().clone()).expect("scale is nonzero")
    }

    /// Rounds to `digits` significant digits.
    pub fn round_sig(&self, digits: u32) -> Decimal {
        Decimal::from_scaled(&self.0, -(SCALE_DIGITS as i32), digits)
    }

    pub fn zeta2() -> Fixed {
        static Z: OnceLock<Fixed> = OnceLock::new();
        Z.get_or_init(|| {
            ZETA2_DIGITS
                .parse::<Decimal>()
                .expect("constant parses")
                .to_fixed()
        })
        .clone()
    }

    /// `atanh(z)` for `|z| <= 1/3` by its Taylor series.
    fn atanh_small(z: &Fixed) -> Fixed {
        let z2 = z * z;
        let mut power = z.clone();
        let mut sum = Fixed::zero();
        let mut k = 1u32;
        while !power.is_zero() {
            sum = &sum + &Fixed(&power.0 / BigInt::from(k));
            power = &power * &z2;
            k += 2;
        }
        sum
    }

    pub fn ln2() -> Fixed {
        static L: OnceLock<Fixed> = OnceLock::new();
        L.get_or_init(|| {
            let third = Fixed::from_rational(&Rational::new(1, 3).expect("nonzero"));
            let a = Fixed::atanh_small(&third);
            &a + &a
        })
        .clone()
    }

    /// Natural logarithm of a positive integer.
    pub fn ln_u64(n: u64) -> Fixed {
        assert!(n >= 1, "ln of zero");
        let k = 63 - n.leading_zeros() as u64;
        let low = 1u128 << k;
        // n = 2^k * y with 1 <= y < 2, and ln y = 2 atanh((y - 1) / (y + 1))
        let z = Rational::new(n as i128 - low as i128, n as i128 + low as i128).expect("nonzero");
        let a = Fixed::atanh_small(&Fixed::from_rational(&z));
        &(&Fixed::ln2() * &Fixed::from_int(k)) + &(&a + &a)
    }
}

impl<'a> Add<&'a Fixed> for &'a Fixed {
    type Output = Fixed;
    fn add(self, rhs: &'a Fixed) -> Fixed {
        Fixed(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a Fixed> for &'a Fixed {
    type Output = Fixed;
    fn sub(self, rhs: &'a Fixed) -> Fixed {
        Fixed(&self.0 - &rhs.0)
    }
}

impl<'a> Mul<&'a Fixed> for &'a Fixed {
    type Output = Fixed;
    fn mul(self, rhs: &'a Fixed) -> Fixed {
        Fixed(div_round(&(&self.0 * &rhs.0), scale()))
    }
}

/// `mantissa * 10^exp`, normalized so the mantissa has no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Decimal {
    mantissa: BigInt,
    exp: i32,
}

impl Decimal {
    fn normalized(mut mantissa: BigInt, mut exp: i32) -> Self {
        if mantissa.is_zero() {
            return Decimal { mantissa, exp: 0 };
        }
        let ten = BigInt::from(10u32);
        loop {
            let (q, r) = mantissa.div_rem(&ten);
            if !r.is_zero() {
                break;
            }
            mantissa = q;
            exp += 1;
        }
        Decimal { mantissa, exp }
    }

    fn from_scaled(value: &BigInt, exp: i32, digits: u32) -> Self {
        let len = value.magnitude().to_str_radix(10).len() as u32;
        if value.is_zero() || len <= digits {
            return Decimal::normalized(value.clone(), exp);
        }
        let drop = len - digits;
        let m = div_round(value, &BigInt::from(10u32).pow(drop));
        Decimal::normalized(m, exp + drop as i32)
    }

    pub fn from_rational(r: &Rational, digits: u32) -> Self {
        Fixed::from_rational(r).round_sig(digits)
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    /// Exact rational value of this decimal.
    pub fn to_rational(&self) -> Rational {
        let ten = BigInt::from(10u32);
        if self.exp >= 0 {
            Rational::from_integer(&self.mantissa * ten.pow(self.exp as u32))
        } else {
            Rational::new(self.mantissa.clone(), ten.pow((-self.exp) as u32)).expect("nonzero")
        }
    }

    fn to_fixed(&self) -> Fixed {
        Fixed::from_rational(&self.to_rational())
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = self.mantissa.magnitude().to_str_radix(10);
        let sign = if self.mantissa.is_negative() { "-" } else { "" };
        if self.exp >= 0 {
            let zeros = if self.mantissa.is_zero() {
                0
            } else {
                self.exp as usize
            };
            return write!(f, "{sign}{digits}{}", "0".repeat(zeros));
        }
        let frac = (-self.exp) as usize;
        if digits.len() > frac {
            let (int, rest) = digits.split_at(digits.len() - frac);
            write!(f, "{sign}{int}.{rest}")
        } else {
            write!(f, "{sign}0.{}{digits}", "0".repeat(frac - digits.len()))
        }
    }
}

impl FromStr for Decimal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::parse("decimal", s, why);
        let (body, neg) = match s.strip_prefix('-') {
            Some(rest) => (rest, true),
            None => (s, false),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() || !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad("expected digits with an optional decimal point"));
        }
        let mantissa: BigInt = format!("{int}{frac}")
            .parse()
            .map_err(|_| bad("expected digits"))?;
        let mantissa = if neg { -mantissa } else { mantissa };
        Ok(Decimal::normalized(mantissa, -(frac.len() as i32)))
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
