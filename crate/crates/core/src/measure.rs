//! Closed-form height densities of balls, spheres and finite ball unions.

use std::fmt;

use num_bigint::BigInt;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ball::{Ball, BallRelation};
use crate::decimal::{Decimal, REPORT_DIGITS};
use crate::error::{Error, Result};
use crate::rational::{ExtendedValuation, Prime, Rational};

/// Which closed form produced a [`MeasureValue`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaTag {
    /// `e <= v(x)`, `e >= 0`: `p^(1-e) / (p+1)`.
    OriginSmall,
    /// `e <= v(x)`, `e < 0`: `1 - p^e / (p+1)`.
    OriginLarge,
    /// `e > v(x) >= 0`: `p^(1-e) / (p+1)`.
    OffsetIntegral,
    /// `e > v(x)`, `v(x) < 0`: `p^(1+2v(x)-e) / (p+1)`.
    OffsetFractional,
    /// Difference of the two balls bounding a sphere.
    SphereDifference,
    /// Difference of two nested balls.
    NestedDifference,
    /// Sum over a disjoint family.
    Union,
}

impl FormulaTag {
    pub fn name(self) -> &'static str {
        match self {
            FormulaTag::OriginSmall => "origin_small",
            FormulaTag::OriginLarge => "origin_large",
            FormulaTag::OffsetIntegral => "offset_integral",
            FormulaTag::OffsetFractional => "offset_fractional",
            FormulaTag::SphereDifference => "sphere_difference",
            FormulaTag::NestedDifference => "nested_difference",
            FormulaTag::Union => "union",
        }
    }
}

impl fmt::Display for FormulaTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An exact density in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasureValue {
    pub value: Rational,
    pub formula_tag: FormulaTag,
}

#[derive(Serialize, Deserialize)]
struct RawMeasure {
    num: String,
    den: String,
    formula_tag: FormulaTag,
}

impl Serialize for MeasureValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawMeasure {
            num: self.value.numer().to_string(),
            den: self.value.denom().to_string(),
            formula_tag: self.formula_tag,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MeasureValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawMeasure::deserialize(d)?;
        let num: BigInt = raw.num.parse().map_err(D::Error::custom)?;
        let den: BigInt = raw.den.parse().map_err(D::Error::custom)?;
        let value = Rational::new(num, den).map_err(D::Error::custom)?;
        if value.is_negative() || value > Rational::one() {
            return Err(D::Error::custom(format!("measure {value} outside [0, 1]")));
        }
        Ok(MeasureValue {
            value,
            formula_tag: raw.formula_tag,
        })
    }
}

fn over_p_plus_1(p: Prime, r: Rational) -> Rational {
    r.checked_div(&Rational::from_integer(p.get() + 1))
        .expect("p + 1 > 0")
}

/// Density of a ball, dispatched on `e` against `v(x)`; `x = 0` has
/// `v = inf` and always lands on the origin branches.
pub fn mu_ball(b: &Ball) -> MeasureValue {
    let p = b.prime();
    let e = b.radius_exp();
    let contains_origin = b.center_valuation().is_at_least(e);
    let (value, formula_tag) = if contains_origin {
        if e >= 0 {
            (over_p_plus_1(p, p.pow(1 - e)), FormulaTag::OriginSmall)
        } else {
            (
                Rational::one() - over_p_plus_1(p, p.pow(e)),
                FormulaTag::OriginLarge,
            )
        }
    } else {
        let v = b.center_valuation().finite().expect("v(x) < e is finite");
        if v >= 0 {
            (over_p_plus_1(p, p.pow(1 - e)), FormulaTag::OffsetIntegral)
        } else {
            (
                over_p_plus_1(p, p.pow(1 + 2 * v - e)),
                FormulaTag::OffsetFractional,
            )
        }
    };
    MeasureValue { value, formula_tag }
}

/// Density of `{r : v(r - x) = e}` as `mu(B(x, e)) - mu(B(x, e + 1))`.
pub fn mu_sphere(p: Prime, x: &Rational, e: i64) -> MeasureValue {
    let outer = Ball::new(p, x.clone(), e);
    let inner = Ball::new(p, x.clone(), e + 1);
    MeasureValue {
        value: mu_ball(&outer).value - mu_ball(&inner).value,
        formula_tag: FormulaTag::SphereDifference,
    }
}

/// Which of the three printed sphere cases applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrintedBranch {
    /// `e <= v(x)` or `e >= 0`: `p^-|e| (p-1)/(p+1)`.
    UnitOrOuter,
    /// `v(x) < e = -1`: `p/(p+1) (p^(1+2v(x)) - 1)`.
    MinusOne,
    /// `v(x) < e < -1`: `p^(2v(x)-e) (p-1)/(p+1)`.
    Middle,
}

impl fmt::Display for PrintedBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrintedBranch::UnitOrOuter => "unit_or_outer",
            PrintedBranch::MinusOne => "minus_one",
            PrintedBranch::Middle => "middle",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrintedSphere {
    pub value: Rational,
    pub branch: PrintedBranch,
    /// Agrees with [`mu_sphere`].
    pub consistent: bool,
}

/// The printed three-case sphere formula, evaluated literally. The value can
/// be negative; `consistent` compares it against the ball difference.
pub fn mu_sphere_printed(p: Prime, x: &Rational, e: i64) -> PrintedSphere {
    let v = crate::rational::valuation(p, x);
    let p_minus_1 = Rational::from_integer(p.get() - 1);
    let (value, branch) = match v {
        ExtendedValuation::Finite(v) if e > v && e < 0 => {
            if e == -1 {
                let pr = over_p_plus_1(p, Rational::from_integer(p.get()));
                (
                    pr * (p.pow(1 + 2 * v) - Rational::one()),
                    PrintedBranch::MinusOne,
                )
            } else {
                (
                    over_p_plus_1(p, p.pow(2 * v - e) * p_minus_1),
                    PrintedBranch::Middle,
                )
            }
        }
        _ => (
            over_p_plus_1(p, p.pow(-e.abs()) * p_minus_1),
            PrintedBranch::UnitOrOuter,
        ),
    };
    let consistent = value == mu_sphere(p, x, e).value;
    PrintedSphere {
        value,
        branch,
        consistent,
    }
}

/// Where the printed sphere formula is expected to agree with the ball
/// difference: everywhere when `v(x) >= 0`, otherwise only for `e < v(x)`
/// and `v(x) < e < -1`.
pub fn printed_sphere_predicted_consistent(v: ExtendedValuation, e: i64) -> bool {
    match v {
        ExtendedValuation::Infinity => true,
        ExtendedValuation::Finite(v) => v >= 0 || e < v || (v < e && e < -1),
    }
}

/// A finite union of balls over one prime, kept as a sorted antichain of
/// pairwise disjoint canonical balls.
///
/// Serializes as a JSON array of balls. Deserialization needs at least one
/// ball to fix the prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BallSet {
    p: Prime,
    balls: Vec<Ball>,
}

impl BallSet {
    pub fn new(p: Prime) -> Self {
        BallSet {
            p,
            balls: Vec::new(),
        }
    }

    pub fn from_balls(p: Prime, balls: impl IntoIterator<Item = Ball>) -> Result<Self> {
        balls
            .into_iter()
            .try_fold(BallSet::new(p), |s, b| s.insert(b))
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn contains(&self, r: &Rational) -> bool {
        self.balls.iter().any(|b| b.contains(r))
    }

    /// Absorbs `b` if a member covers it, otherwise drops the members it
    /// covers and adds it.
    pub fn insert(&self, b: Ball) -> Result<BallSet> {
        if b.prime() != self.p {
            return Err(Error::PrimeMismatch {
                left: self.p.get(),
                right: b.prime().get(),
            });
        }
        let mut balls = Vec::with_capacity(self.balls.len() + 1);
        for m in &self.balls {
            match b.relation(m)? {
                BallRelation::Equal | BallRelation::AInsideB => return Ok(self.clone()),
                BallRelation::BInsideA => {}
                BallRelation::Disjoint => balls.push(m.clone()),
            }
        }
        balls.push(b);
        balls.sort_by(|l, r| (l.radius_exp(), l.center()).cmp(&(r.radius_exp(), r.center())));
        Ok(BallSet { p: self.p, balls })
    }
}

impl Serialize for BallSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.balls.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BallSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let balls = Vec::<Ball>::deserialize(d)?;
        let p = balls
            .first()
            .map(Ball::prime)
            .ok_or_else(|| D::Error::custom("an empty ball set does not determine its prime"))?;
        BallSet::from_balls(p, balls).map_err(D::Error::custom)
    }
}

pub fn ballset_insert(s: &BallSet, b: Ball) -> Result<BallSet> {
    s.insert(b)
}

pub fn mu_union(s: &BallSet) -> MeasureValue {
    let value = s
        .balls
        .iter()
        .fold(Rational::zero(), |acc, b| acc + mu_ball(b).value);
    MeasureValue {
        value,
        formula_tag: FormulaTag::Union,
    }
}

/// `mu(outer \ inner)` for `inner` inside or equal to `outer`.
pub fn mu_difference(outer: &Ball, inner: &Ball) -> Result<MeasureValue> {
    if !inner.is_within(outer)? {
        return Err(Error::NotNested {
            inner: inner.to_string(),
            outer: outer.to_string(),
        });
    }
    Ok(MeasureValue {
        value: mu_ball(outer).value - mu_ball(inner).value,
        formula_tag: FormulaTag::NestedDifference,
    })
}

/// A ball with its exact density and a decimal rendering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityReport {
    pub ball: Ball,
    pub value: Rational,
    pub decimal: Decimal,
    pub formula_tag: FormulaTag,
}

impl DensityReport {
    pub const CSV_HEADER: &'static str = "p,center,e,num,den,decimal,formula_tag";

    pub fn new(ball: &Ball) -> Self {
        let m = mu_ball(ball);
        DensityReport {
            ball: ball.clone(),
            decimal: Decimal::from_rational(&m.value, REPORT_DIGITS),
            value: m.value,
            formula_tag: m.formula_tag,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.ball.prime(),
            self.ball.center(),
            self.ball.radius_exp(),
            self.value.numer(),
            self.value.denom(),
            self.decimal,
            self.formula_tag
        )
    }
}

/// A sphere density next to the printed formula's value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphereReport {
    pub p: Prime,
    pub center: Rational,
    pub e: i64,
    pub value: Rational,
    pub decimal: Decimal,
    pub printed: PrintedSphere,
    pub printed_decimal: Decimal,
}

impl SphereReport {
    pub const CSV_HEADER: &'static str =
        "p,center,e,num,den,decimal,printed_num,printed_den,printed_branch,consistent";

    pub fn new(p: Prime, x: &Rational, e: i64) -> Self {
        let value = mu_sphere(p, x, e).value;
        let printed = mu_sphere_printed(p, x, e);
        SphereReport {
            p,
            center: x.clone(),
            e,
            decimal: Decimal::from_rational(&value, REPORT_DIGITS),
            value,
            printed_decimal: Decimal::from_rational(&printed.value, REPORT_DIGITS),
            printed,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.p,
            self.center,
            self.e,
            self.value.numer(),
            self.value.denom(),
            self.decimal,
            self.printed.value.numer(),
            self.printed.value.denom(),
            self.printed.branch,
            self.printed.consistent
        )
    }
}

/// The density of a finite union of balls.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnionReport {
    pub balls: BallSet,
    pub value: Rational,
    pub decimal: Decimal,
}

impl UnionReport {
    pub const CSV_HEADER: &'static str = "p,balls,num,den,decimal";

    pub fn new(set: &BallSet) -> Self {
        let value = mu_union(set).value;
        UnionReport {
            balls: set.clone(),
            decimal: Decimal::from_rational(&value, REPORT_DIGITS),
            value,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.balls.prime(),
            self.balls.len(),
            self.value.numer(),
            self.value.denom(),
            self.decimal
        )
    }
}
