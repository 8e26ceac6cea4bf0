//! Closed p-adic balls `B(x, p^-e) = { r : v_p(r - x) >= e }` with a canonical
//! center, so that two balls are the same set exactly when their records are
//! equal.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::rational::{
    big_pow, mod_inverse, valuation, vp_bigint, ExtendedValuation, Prime, Rational,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Ball {
    p: Prime,
    center: Rational,
    e: i64,
}

/// How two balls over the same prime sit relative to each other. Partial
/// overlap is impossible in an ultrametric space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallRelation {
    Equal,
    AInsideB,
    BInsideA,
    Disjoint,
}

/// Canonical representative of `center` modulo `p^e`.
///
/// When the ball contains 0 the representative is 0. Otherwise it is the
/// digit sum `sum a_i p^i` over `v_p(center) <= i < e`, with `0 <= a_i < p`.
fn canonical_center(p: Prime, center: &Rational, e: i64) -> Rational {
    let v = match valuation(p, center) {
        ExtendedValuation::Infinity => return Rational::zero(),
        ExtendedValuation::Finite(v) if e <= v => return Rational::zero(),
        ExtendedValuation::Finite(v) => v,
    };
    // center = num / (p^k * rest), p does not divide rest
    let k = vp_bigint(p, center.denom()) as i64;
    let pk = big_pow(p, k);
    let rest = center.denom() / &pk;
    debug_assert!(e + k >= 1 && v >= -k);
    let modulus = big_pow(p, e + k);
    let digits = (center.numer() * mod_inverse(&rest, &modulus)).mod_floor(&modulus);
    Rational::new(digits, pk).expect("p^k is nonzero")
}

impl Ball {
    /// Builds the canonical form of `B(center, p^-e)`.
    pub fn new(p: Prime, center: Rational, e: i64) -> Self {
        let center = canonical_center(p, &center, e);
        Ball { p, center, e }
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn center(&self) -> &Rational {
        &self.center
    }

    /// Radius exponent: the ball has radius `p^-e`.
    pub fn radius_exp(&self) -> i64 {
        self.e
    }

    /// Valuation of the canonical center; `Infinity` exactly when 0 is a member.
    pub fn center_valuation(&self) -> ExtendedValuation {
        valuation(self.p, &self.center)
    }

    pub fn contains(&self, r: &Rational) -> bool {
        valuation(self.p, &(r - &self.center)).is_at_least(self.e)
    }

    pub fn relation(&self, other: &Ball) -> Result<BallRelation> {
        if self.p != other.p {
            return Err(Error::PrimeMismatch {
                left: self.p.get(),
                right: other.p.get(),
            });
        }
        use std::cmp::Ordering::*;
        Ok(match self.e.cmp(&other.e) {
            Equal if self.center == other.center => BallRelation::Equal,
            Equal => BallRelation::Disjoint,
            Greater if other.contains(&self.center) => BallRelation::AInsideB,
            Less if self.contains(&other.center) => BallRelation::BInsideA,
            _ => BallRelation::Disjoint,
        })
    }

    /// True when `self` is a subset of `other` (including equality).
    pub fn is_within(&self, other: &Ball) -> Result<bool> {
        Ok(matches!(
            self.relation(other)?,
            BallRelation::Equal | BallRelation::AInsideB
        ))
    }
}

/// The sphere `{ r : v_p(r - x) = e }`, the difference of two nested balls.
///
/// The center is canonical modulo `p^(e+1)`, like the center of the larger
/// ball's inner neighbour `B(x, p^-(e+1))`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Sphere {
    p: Prime,
    center: Rational,
    e: i64,
}

impl Sphere {
    pub fn new(p: Prime, center: Rational, e: i64) -> Self {
        let center = canonical_center(p, &center, e + 1);
        Sphere { p, center, e }
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn center(&self) -> &Rational {
        &self.center
    }

    pub fn valuation_exp(&self) -> i64 {
        self.e
    }

    /// The ball `{ v_p(r - x) >= e }` enclosing the sphere.
    pub fn outer(&self) -> Ball {
        Ball::new(self.p, self.center.clone(), self.e)
    }

    /// The ball `{ v_p(r - x) >= e + 1 }` removed from [`Sphere::outer`].
    pub fn inner(&self) -> Ball {
        Ball::new(self.p, self.center.clone(), self.e + 1)
    }

    pub fn contains(&self, r: &Rational) -> bool {
        valuation(self.p, &(r - &self.center)) == ExtendedValuation::Finite(self.e)
    }
}

impl<'de> Deserialize<'de> for Sphere {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawBall::deserialize(d)?;
        Ok(Sphere::new(raw.p, raw.center, raw.e))
    }
}

pub fn ball_canonical(p: Prime, center: Rational, e: i64) -> Ball {
    Ball::new(p, center, e)
}

pub fn ball_contains(b: &Ball, r: &Rational) -> bool {
    b.contains(r)
}

pub fn ball_relation(a: &Ball, b: &Ball) -> Result<BallRelation> {
    a.relation(b)
}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B({}, {}^{})", self.center, self.p, -self.e)
    }
}

#[derive(Deserialize)]
struct RawBall {
    p: Prime,
    center: Rational,
    e: i64,
}

impl<'de> Deserialize<'de> for Ball {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawBall::deserialize(d)?;
        Ok(Ball::new(raw.p, raw.center, raw.e))
    }
}

/// Parses a center given either as a rational (`a/b`, `a`) or as a truncated
/// p-adic expansion `d0,d1,...@k`, meaning `d0 p^k + d1 p^(k+1) + ...`.
pub fn parse_center(p: Prime, s: &str) -> Result<Rational> {
    let Some((digits, exp)) = s.split_once('@') else {
        return s.parse();
    };
    let exp: i64 = exp
        .trim()
        .replace('\u{2212}', "-")
        .parse()
        .map_err(|_| Error::parse("digit expansion", s, "bad exponent after '@'"))?;
    let mut value = Rational::zero();
    for (i, d) in digits.split(',').enumerate() {
        let d: u64 = d.trim().parse().map_err(|_| {
            Error::parse("digit expansion", s, "digits must be nonnegative integers")
        })?;
        if d >= p.get() {
            return Err(Error::parse(
                "digit expansion",
                s,
                format!("digit {d} is not below p = {p}"),
            ));
        }
        value = value + Rational::from_integer(BigInt::from(d)) * p.pow(exp + i as i64);
    }
    Ok(value)
}
