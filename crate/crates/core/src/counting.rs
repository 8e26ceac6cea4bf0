//! Counting bounded-height rationals.
//!
//! Rationals of height exactly `t` come in two coprime families, `+-t/n`
//! and `m/t`. Counting a region inside such a slice only needs the units
//! modulo `t` and a valuation test, which [`Membership`] runs in machine
//! words whenever the operands fit.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::arithfn::{distinct_primes, divisor_count, totient, EnvelopeCheck};
use crate::ball::{Ball, Sphere};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rational::{mod_inverse, valuation, vp_u64, ExtendedValuation, Prime, Rational};

/// A set of rationals that can be counted slice by slice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Ball(Ball),
    Sphere(Sphere),
}

impl Region {
    pub fn prime(&self) -> Prime {
        match self {
            Region::Ball(b) => b.prime(),
            Region::Sphere(s) => s.prime(),
        }
    }

    pub fn contains(&self, r: &Rational) -> bool {
        match self {
            Region::Ball(b) => b.contains(r),
            Region::Sphere(s) => s.contains(r),
        }
    }

    pub(crate) fn membership(&self, t_max: u64) -> Membership {
        match self {
            Region::Ball(b) => {
                Membership::new(b.prime(), b.center(), Rule::AtLeast(b.radius_exp()), t_max)
            }
            Region::Sphere(s) => Membership::new(
                s.prime(),
                s.center(),
                Rule::Exactly(s.valuation_exp()),
                t_max,
            ),
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Ball(b) => write!(f, "{b}"),
            Region::Sphere(s) => write!(
                f,
                "S({}, v={} @p={})",
                s.center(),
                s.valuation_exp(),
                s.prime()
            ),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Rule {
    AtLeast(i64),
    Exactly(i64),
}

impl Rule {
    #[inline]
    fn accepts(self, v: Option<i64>) -> bool {
        match (self, v) {
            (Rule::AtLeast(_), None) => true,
            (Rule::Exactly(_), None) => false,
            (Rule::AtLeast(e), Some(w)) => w >= e,
            (Rule::Exactly(e), Some(w)) => w == e,
        }
    }
}

/// Membership test `v_p(m/n - c)` against a rule, for reduced `m/n`.
pub(crate) struct Membership {
    p: Prime,
    center: Rational,
    rule: Rule,
    /// `(num, den, v_p(den))` of the center when all products fit in `i64`.
    small: Option<(i64, i64, i64)>,
}

#[inline]
fn vp_i64(p: u64, x: i64) -> i64 {
    let x = x.unsigned_abs();
    if p == 2 {
        x.trailing_zeros() as i64
    } else {
        vp_u64(p, x) as i64
    }
}

impl Membership {
    fn new(p: Prime, center: &Rational, rule: Rule, t_max: u64) -> Self {
        let small = center.to_i128_pair().and_then(|(cn, cd)| {
            let span = (cn.unsigned_abs() + cd.unsigned_abs()).checked_mul(t_max as u128)?;
            (span < 1u128 << 62).then(|| {
                let v_cd = vp_i64(p.get(), cd as i64);
                (cn as i64, cd as i64, v_cd)
            })
        });
        Membership {
            p,
            center: center.clone(),
            rule,
            small,
        }
    }

    /// `v_p(m/n - center)`, `None` for infinity.
    #[inline]
    fn diff_valuation(&self, m: i64, n: i64) -> Option<i64> {
        match self.small {
            Some((cn, cd, v_cd)) => {
                let d = m * cd - cn * n;
                if d == 0 {
                    return None;
                }
                let p = self.p.get();
                Some(vp_i64(p, d) - vp_i64(p, n) - v_cd)
            }
            None => {
                let r = Rational::new(m, n).expect("positive denominator");
                valuation(self.p, &(&r - &self.center)).finite()
            }
        }
    }

    #[inline]
    pub(crate) fn contains(&self, m: i64, n: i64) -> bool {
        self.rule.accepts(self.diff_valuation(m, n))
    }
}

/// Units modulo `t` in `[1, t]`.
pub(crate) fn units(t: u64) -> Vec<u64> {
    if t == 1 {
        return vec![1];
    }
    let mut coprime = vec![true; t as usize + 1];
    for q in distinct_primes(t) {
        for k in (q..=t).step_by(q as usize) {
            coprime[k as usize] = false;
        }
    }
    (1..=t).filter(|&u| coprime[u as usize]).collect()
}

/// `#Q(t)`: 3 at `t = 1` (the set `{0, 1, -1}`), `4 phi(t)` from there on.
pub fn q_slice_size(t: u64) -> u64 {
    match t {
        0 => 0,
        1 => 3,
        _ => 4 * totient(t),
    }
}

/// All reduced rationals of height exactly `t`, sorted.
pub fn q_slice(t: u64) -> Vec<Rational> {
    if t == 0 {
        return Vec::new();
    }
    let t_i = t as i64;
    let mut out = Vec::new();
    for n in 1..=t_i {
        if n.gcd(&t_i) == 1 {
            out.push(Rational::new(t_i, n).expect("n >= 1"));
            out.push(Rational::new(-t_i, n).expect("n >= 1"));
        }
    }
    for m in -t_i..=t_i {
        if m.gcd(&t_i) == 1 {
            out.push(Rational::new(m, t_i).expect("t >= 1"));
        }
    }
    out.sort();
    // +-1/1 lies in both families when t = 1
    out.dedup();
    out
}

/// Exact `#(region ∩ Q(t))` and `#Q(t)` without materializing `Q(t)`.
pub(crate) fn count_slice(member: &Membership, t: u64) -> (u64, u64) {
    if t == 1 {
        let hits = [(0, 1), (1, 1), (-1, 1)]
            .into_iter()
            .filter(|&(m, n)| member.contains(m, n))
            .count() as u64;
        return (hits, 3);
    }
    let ti = t as i64;
    let us = units(t);
    let mut hits = 0u64;
    for &u in &us {
        let u = u as i64;
        hits += member.contains(ti, u) as u64;
        hits += member.contains(-ti, u) as u64;
        hits += member.contains(u, ti) as u64;
        hits += member.contains(-u, ti) as u64;
    }
    (hits, 4 * us.len() as u64)
}

pub fn slice_count_exact(ball: &Ball, t: u64) -> u64 {
    if t == 0 {
        return 0;
    }
    count_slice(&Region::Ball(ball.clone()).membership(t), t).0
}

/// Brute-force slice count: materialize `Q(t)` and test each member exactly.
pub fn slice_count_by_enumeration(region: &Region, t: u64) -> u64 {
    q_slice(t).iter().filter(|r| region.contains(r)).count() as u64
}

/// Which slice-cardinality branch applies to a (ball, height) pair.
///
/// `Origin*` balls contain 0 (`e <= v(x)`), `Offset*` balls do not. The
/// suffix compares `v_p(t)` with the branch thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceCase {
    /// `e > 0`, `v(t) = 0`: `2 p^-e phi(t) +- 4 d(t)`.
    OriginSmallUnit,
    /// `e > 0`, `0 < v(t) < e`: exactly 0.
    OriginSmallShallow,
    /// `e > 0`, `v(t) >= e`: exactly `2 phi(t)`.
    OriginSmallDeep,
    /// `e <= 0`, `v(t) = 0`: `2 (2 - p^(e-1)) phi(t) +- 4 d(t)`.
    OriginLargeUnit,
    /// `e <= 0`, `0 < v(t) < 1 - e`: exactly `4 phi(t)`.
    OriginLargeShallow,
    /// `e <= 0`, `v(t) >= 1 - e`: exactly `2 phi(t)`.
    OriginLargeDeep,
    /// `0 < v(x) < e`, `v(t) = 0`: `2 p^-e phi(t) +- 4 d(t)`.
    OffsetIntegralUnit,
    /// `0 < v(x) < e`, `v(t) = v(x)`: `2 p^(1+v(x)-e) / (p-1) phi(t) +- 4 d(t)`.
    OffsetIntegralMatch,
    OffsetIntegralOther,
    /// `v(x) = 0 < e`, `v(t) = 0`: `4 p^-e phi(t) +- 8 d(t)`.
    OffsetUnitUnit,
    OffsetUnitOther,
    /// `v(x) < 0`, `v(t) = 0`: `2 p^(2v(x)-e) phi(t) +- 4 d(t)`.
    OffsetFractionalUnit,
    /// `v(x) < 0`, `v(t) = -v(x)`: `2 p^(1+v(x)-e) / (p-1) phi(t) +- 4 d(t)`.
    OffsetFractionalMatch,
    OffsetFractionalOther,
}

impl SliceCase {
    pub const ALL: [SliceCase; 14] = [
        SliceCase::OriginSmallUnit,
        SliceCase::OriginSmallShallow,
        SliceCase::OriginSmallDeep,
        SliceCase::OriginLargeUnit,
        SliceCase::OriginLargeShallow,
        SliceCase::OriginLargeDeep,
        SliceCase::OffsetIntegralUnit,
        SliceCase::OffsetIntegralMatch,
        SliceCase::OffsetIntegralOther,
        SliceCase::OffsetUnitUnit,
        SliceCase::OffsetUnitOther,
        SliceCase::OffsetFractionalUnit,
        SliceCase::OffsetFractionalMatch,
        SliceCase::OffsetFractionalOther,
    ];

    /// Branches whose main term is the exact count.
    pub fn is_exact(self) -> bool {
        use SliceCase::*;
        matches!(
            self,
            OriginSmallShallow
                | OriginSmallDeep
                | OriginLargeShallow
                | OriginLargeDeep
                | OffsetIntegralOther
                | OffsetUnitOther
                | OffsetFractionalOther
        )
    }

    pub fn name(self) -> String {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default()
    }
}

impl fmt::Display for SliceCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Per-height record: exact slice count against its main term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceStat {
    pub t: u64,
    pub exact: u64,
    pub main: Rational,
    pub bound: u64,
    pub case_tag: SliceCase,
}

impl SliceStat {
    pub const CSV_HEADER: &'static str = "t,exact,main_num,main_den,bound,case_tag";

    /// `|exact - main| <= bound`, and equality on the exact branches.
    pub fn within_envelope(&self) -> bool {
        let exact = Rational::from_integer(self.exact);
        if self.case_tag.is_exact() {
            return exact == self.main && self.bound == 0;
        }
        (&exact - &self.main).abs() <= Rational::from_integer(self.bound)
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.t,
            self.exact,
            self.main.numer(),
            self.main.denom(),
            self.bound,
            self.case_tag
        )
    }
}

/// Main term, error bound and branch for `#(ball ∩ Q(t))`.
pub fn slice_formula(ball: &Ball, t: u64) -> (Rational, u64, SliceCase) {
    use SliceCase::*;
    let p = ball.prime();
    let e = ball.radius_exp();
    let vt = vp_u64(p.get(), t) as i64;
    let phi = Rational::from_integer(totient(t));
    let d = divisor_count(t);
    let int = |n: i64| Rational::from_integer(n);
    let p_minus_1 = int(p.get() as i64 - 1);
    let over_p_minus_1 = |r: Rational| r.checked_div(&p_minus_1).expect("p >= 2");

    match ball.center_valuation() {
        ExtendedValuation::Infinity if e > 0 => {
            if vt == 0 {
                (int(2) * p.pow(-e) * phi, 4 * d, OriginSmallUnit)
            } else if vt < e {
                (Rational::zero(), 0, OriginSmallShallow)
            } else {
                (int(2) * phi, 0, OriginSmallDeep)
            }
        }
        ExtendedValuation::Infinity => {
            if vt == 0 {
                (
                    int(2) * (int(2) - p.pow(e - 1)) * phi,
                    4 * d,
                    OriginLargeUnit,
                )
            } else if vt < 1 - e {
                (int(4) * phi, 0, OriginLargeShallow)
            } else {
                (int(2) * phi, 0, OriginLargeDeep)
            }
        }
        ExtendedValuation::Finite(v) if v > 0 => {
            if vt == 0 {
                (int(2) * p.pow(-e) * phi, 4 * d, OffsetIntegralUnit)
            } else if vt == v {
                let main = int(2) * over_p_minus_1(p.pow(1 + v - e)) * phi;
                (main, 4 * d, OffsetIntegralMatch)
            } else {
                (Rational::zero(), 0, OffsetIntegralOther)
            }
        }
        ExtendedValuation::Finite(0) => {
            if vt == 0 {
                (int(4) * p.pow(-e) * phi, 8 * d, OffsetUnitUnit)
            } else {
                (Rational::zero(), 0, OffsetUnitOther)
            }
        }
        ExtendedValuation::Finite(v) => {
            if vt == 0 {
                (int(2) * p.pow(2 * v - e) * phi, 4 * d, OffsetFractionalUnit)
            } else if vt == -v {
                let main = int(2) * over_p_minus_1(p.pow(1 + v - e)) * phi;
                (main, 4 * d, OffsetFractionalMatch)
            } else {
                (Rational::zero(), 0, OffsetFractionalOther)
            }
        }
    }
}

pub fn slice_main_term(ball: &Ball, t: u64) -> SliceStat {
    let (main, bound, case_tag) = slice_formula(ball, t);
    SliceStat {
        t,
        exact: slice_count_exact(ball, t),
        main,
        bound,
        case_tag,
    }
}

/// Slice records for every `t` in `[t_from, t_to]`.
pub fn slice_stats(ball: &Ball, t_from: u64, t_to: u64, exec: &Exec) -> Vec<SliceStat> {
    if t_from > t_to {
        return Vec::new();
    }
    let member = Region::Ball(ball.clone()).membership(t_to);
    exec.map_range(t_from.max(1)..=t_to, |t| {
        let (main, bound, case_tag) = slice_formula(ball, t);
        SliceStat {
            t,
            exact: count_slice(&member, t).0,
            main,
            bound,
            case_tag,
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountJob {
    pub ball: Ball,
    pub t_from: u64,
    pub t_to: u64,
    pub stride: u64,
}

impl CountJob {
    pub fn new(ball: Ball, t_from: u64, t_to: u64, stride: u64) -> Result<Self> {
        if t_from == 0 {
            return Err(Error::NonPositive {
                what: "range start",
            });
        }
        if stride == 0 {
            return Err(Error::NonPositive { what: "stride" });
        }
        if t_from > t_to {
            return Err(Error::parse(
                "height range",
                &format!("{t_from}..={t_to}"),
                "start exceeds end",
            ));
        }
        Ok(CountJob {
            ball,
            t_from,
            t_to,
            stride,
        })
    }
}

/// Running totals after height `t`: region members and all rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    #[serde(rename = "T")]
    pub t: u64,
    pub numerator: u64,
    pub denominator: u64,
}

fn is_checkpoint(t: u64, t_to: u64, stride: u64) -> bool {
    t.is_multiple_of(stride) || t == t_to
}

/// Per-slice counts reduced in ascending `t` order, so checkpoints do not
/// depend on how the slices were scheduled.
pub(crate) fn region_checkpoints(
    region: &Region,
    t_from: u64,
    t_to: u64,
    stride: u64,
    exec: &Exec,
) -> Vec<Checkpoint> {
    let member = region.membership(t_to);
    let counts = exec.map_range(t_from..=t_to, |t| count_slice(&member, t));
    let mut numerator = 0u64;
    let mut denominator = 0u64;
    let mut out = Vec::new();
    for (t, (hits, size)) in (t_from..=t_to).zip(counts) {
        numerator = numerator.checked_add(hits).expect("count overflow");
        denominator = denominator.checked_add(size).expect("count overflow");
        if is_checkpoint(t, t_to, stride) {
            out.push(Checkpoint {
                t,
                numerator,
                denominator,
            });
        }
    }
    out
}

pub fn cumulative_counts(job: &CountJob, exec: &Exec) -> Vec<Checkpoint> {
    region_checkpoints(
        &Region::Ball(job.ball.clone()),
        job.t_from,
        job.t_to,
        job.stride,
        exec,
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountSummary {
    pub ball: Ball,
    pub t_from: u64,
    pub t_to: u64,
    pub numerator: u64,
    pub denominator: u64,
    pub envelope_failures: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountJobOutput {
    pub slices: Vec<SliceStat>,
    pub checkpoints: Vec<Checkpoint>,
    pub summary: CountSummary,
}

pub fn run_count_job(job: &CountJob, exec: &Exec) -> CountJobOutput {
    let slices = slice_stats(&job.ball, job.t_from, job.t_to, exec);
    let mut numerator = 0u64;
    let mut denominator = 0u64;
    let mut checkpoints = Vec::new();
    for s in &slices {
        numerator += s.exact;
        denominator += q_slice_size(s.t);
        if is_checkpoint(s.t, job.t_to, job.stride) {
            checkpoints.push(Checkpoint {
                t: s.t,
                numerator,
                denominator,
            });
        }
    }
    let envelope_failures = slices.iter().filter(|s| !s.within_envelope()).count() as u64;
    CountJobOutput {
        slices,
        checkpoints,
        summary: CountSummary {
            ball: job.ball.clone(),
            t_from: job.t_from,
            t_to: job.t_to,
            numerator,
            denominator,
            envelope_failures,
        },
    }
}

/// Smallest `k` with `p^k >= n`.
fn ceil_log(p: Prime, n: &BigInt) -> u32 {
    let mut k = 0;
    let mut pk = BigInt::from(1u32);
    while &pk < n {
        pk *= p.get();
        k += 1;
    }
    k
}

/// An integer congruent to `a` modulo `p^eta`, with `eta` large enough that
/// `v_p(n - a t)` and `v_p(n - a' t)` agree on the threshold `e` for every
/// `0 <= n <= bound`.
pub fn integer_approximant(p: Prime, t: u64, a: &Rational, e: i64, bound: u64) -> BigInt {
    if a.is_integer() {
        return a.numer().clone();
    }
    let size = BigInt::from(bound.max(1)) * BigInt::from(t) * a.denom();
    let eta = e.max(0) as u32 + ceil_log(p, &size) + 1;
    let modulus = p.pow_int(eta);
    (a.numer() * mod_inverse(a.denom(), &modulus)).mod_floor(&modulus)
}

/// `#{ 0 <= n <= bound : gcd(n, t) = 1, v_p(n - a t) >= e }` for p-integral `a`.
pub fn count_valuation_progression(
    p: Prime,
    t: u64,
    a: &Rational,
    e: i64,
    bound: u64,
) -> Result<u64> {
    if t == 0 {
        return Err(Error::NonPositive { what: "modulus t" });
    }
    if let ExtendedValuation::Finite(v) = valuation(p, a) {
        if v < 0 {
            return Err(Error::NotIntegral {
                p: p.get(),
                value: a.to_string(),
            });
        }
    }
    let a_int = integer_approximant(p, t, a, e, bound);
    let modulus = p.pow_int(e.max(0) as u32);
    let residue = (a_int * BigInt::from(t)).mod_floor(&modulus);
    let primes = distinct_primes(t);
    let coprime = |n: u64| primes.iter().all(|q| !n.is_multiple_of(*q));
    let Some(step) = modulus.to_u64().filter(|&m| m <= bound) else {
        // at most one candidate in range
        return Ok(match residue.to_u64() {
            Some(r) if r <= bound && coprime(r) => 1,
            _ => 0,
        });
    };
    let start = residue.to_u64().expect("residue below modulus");
    Ok((start..=bound)
        .step_by(step as usize)
        .filter(|&n| coprime(n))
        .count() as u64)
}

/// The progression count against `p^-max(0,e) (T/t) phi(t) +- 2 d(t)` when
/// `p` does not divide `t`, `(T/t) phi(t) +- d(t)` when it does and
/// `e <= 0`, and exactly 0 when it does and `e > 0`. Requires `t > 1`.
pub fn progression_envelope(
    p: Prime,
    t: u64,
    a: &Rational,
    e: i64,
    bound: u64,
) -> Result<EnvelopeCheck> {
    if t <= 1 {
        return Err(Error::ModulusTooSmall(t));
    }
    let exact = count_valuation_progression(p, t, a, e, bound)?;
    let density = Rational::new(bound, t)? * Rational::from_integer(totient(t));
    let (main, err) = if !t.is_multiple_of(p.get()) {
        (p.pow(-e.max(0)) * density, 2 * divisor_count(t))
    } else if e <= 0 {
        (density, divisor_count(t))
    } else {
        (Rational::zero(), 0)
    };
    Ok(EnvelopeCheck::new(exact, main, err))
}

/// Balls covering every [`SliceCase`] within `t <= 64`.
pub fn standard_battery() -> Vec<Ball> {
    let b = |p: u64, x: (i64, i64), e: i64| {
        Ball::new(
            Prime::new(p).expect("battery primes"),
            Rational::new(x.0, x.1).expect("battery centers"),
            e,
        )
    };
    vec![
        b(2, (0, 1), 1),
        b(3, (0, 1), 2),
        b(5, (25, 1), 2),
        b(2, (0, 1), 0),
        b(3, (0, 1), -1),
        b(2, (0, 1), -2),
        b(2, (2, 1), 3),
        b(3, (9, 1), 3),
        b(2, (1, 1), 1),
        b(5, (2, 3), 2),
        b(2, (1, 2), 0),
        b(2, (1, 2), 1),
        b(3, (1, 9), 1),
        b(2, (1, 4), -1),
    ]
}
