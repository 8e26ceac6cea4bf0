//! Totient and divisor-count tables, the partial totient `phi(t, x)` with its
//! `d(t)` envelope, and the restricted totient sums with their asymptotic main
//! terms.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::decimal::{Decimal, Fixed, REPORT_DIGITS};
use crate::error::{Error, Result};
use crate::rational::{Prime, Rational};

pub const DEFAULT_SIEVE_CAP: u64 = 10_000_000;

/// `(prime, exponent)` pairs of `n`, by trial division.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            let mut k = 0;
            while n.is_multiple_of(d) {
                n /= d;
                k += 1;
            }
            out.push((d, k));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn distinct_primes(n: u64) -> Vec<u64> {
    factorize(n).into_iter().map(|(q, _)| q).collect()
}

pub fn totient(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    factorize(n)
        .into_iter()
        .fold(n, |acc, (q, _)| acc / q * (q - 1))
}

pub fn divisor_count(n: u64) -> u64 {
    factorize(n)
        .into_iter()
        .map(|(_, k)| k as u64 + 1)
        .product()
}

/// Exact `phi` and `d` tables up to `limit`, built by a linear sieve.
#[derive(Debug, Clone)]
pub struct SieveTables {
    limit: u64,
    phi: Vec<u32>,
    divcount: Vec<u32>,
}

impl SieveTables {
    pub fn build(limit: u64) -> Result<Self> {
        Self::build_with_cap(limit, DEFAULT_SIEVE_CAP)
    }

    pub fn build_with_cap(limit: u64, cap: u64) -> Result<Self> {
        if limit == 0 {
            return Err(Error::NonPositive {
                what: "sieve limit",
            });
        }
        if limit > cap || limit > u32::MAX as u64 {
            return Err(Error::SieveCap { limit, cap });
        }
        let n = limit as usize;
        let mut phi = vec![0u32; n + 1];
        let mut divcount = vec![0u32; n + 1];
        // exponent of the smallest prime factor
        let mut spf_exp = vec![0u8; n + 1];
        let mut primes: Vec<u32> = Vec::new();
        phi[1] = 1;
        divcount[1] = 1;
        for i in 2..=n {
            if phi[i] == 0 {
                phi[i] = i as u32 - 1;
                divcount[i] = 2;
                spf_exp[i] = 1;
                primes.push(i as u32);
            }
            for &q in &primes {
                let q = q as usize;
                let Some(j) = i.checked_mul(q).filter(|&j| j <= n) else {
                    break;
                };
                if i % q == 0 {
                    phi[j] = phi[i] * q as u32;
                    let k = spf_exp[i] as u32;
                    divcount[j] = divcount[i] / (k + 1) * (k + 2);
                    spf_exp[j] = spf_exp[i] + 1;
                    break;
                }
                phi[j] = phi[i] * (q as u32 - 1);
                divcount[j] = divcount[i] * 2;
                spf_exp[j] = 1;
            }
        }
        Ok(SieveTables {
            limit,
            phi,
            divcount,
        })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn phi(&self, n: u64) -> u64 {
        self.phi[n as usize] as u64
    }

    pub fn divcount(&self, n: u64) -> u64 {
        self.divcount[n as usize] as u64
    }

    fn check(&self, t: u64) -> Result<()> {
        if t > self.limit {
            return Err(Error::SieveCap {
                limit: t,
                cap: self.limit,
            });
        }
        Ok(())
    }

    pub fn sum_phi(&self, t: u64) -> Result<u128> {
        self.check(t)?;
        Ok(self.phi[1..=t as usize].iter().map(|&x| x as u128).sum())
    }

    pub fn sum_divcount(&self, t: u64) -> Result<u128> {
        self.check(t)?;
        Ok(self.divcount[1..=t as usize]
            .iter()
            .map(|&x| x as u128)
            .sum())
    }

    /// `sum phi(n)` over `n <= t` with `p` not dividing `n`.
    pub fn sum_phi_coprime(&self, t: u64, p: Prime) -> Result<u128> {
        self.check(t)?;
        let p = p.get();
        Ok((1..=t)
            .filter(|n| n % p != 0)
            .map(|n| self.phi(n) as u128)
            .sum())
    }

    /// `sum phi(n)` over `n <= t` divisible by `p^e`.
    pub fn sum_phi_multiple_pe(&self, t: u64, p: Prime, e: u32) -> Result<u128> {
        self.check(t)?;
        if e == 0 {
            return Err(Error::NonPositive {
                what: "valuation exponent",
            });
        }
        let Some(step) = p.get().checked_pow(e).filter(|&s| s <= t) else {
            return Ok(0);
        };
        Ok((step..=t)
            .step_by(step as usize)
            .map(|n| self.phi(n) as u128)
            .sum())
    }

    /// `sum phi(n)` over `n <= t` with `v_p(n) = e`.
    pub fn sum_phi_valuation(&self, t: u64, p: Prime, e: u32) -> Result<u128> {
        Ok(self.sum_phi_multiple_pe(t, p, e)? - self.sum_phi_multiple_pe(t, p, e + 1)?)
    }
}

/// Count of `1 <= n <= floor(x)` with `gcd(n, t) = 1`, by inclusion-exclusion
/// over the prime divisors of `t`.
pub fn phi_partial(t: u64, x: &Rational) -> Result<u64> {
    if t == 0 {
        return Err(Error::NonPositive { what: "modulus t" });
    }
    let floor = x.floor();
    if floor.is_negative() {
        return Ok(0);
    }
    let bound = floor
        .to_u64()
        .ok_or_else(|| Error::Overflow(format!("bound {x} does not fit in 64 bits")))?;
    Ok(coprime_count_upto(&distinct_primes(t), bound))
}

pub(crate) fn coprime_count_upto(primes: &[u64], x: u64) -> u64 {
    let mut total: i128 = 0;
    for mask in 0u32..(1 << primes.len()) {
        let mut d: u64 = 1;
        let mut overflow = false;
        for (i, q) in primes.iter().enumerate() {
            if mask >> i & 1 == 1 {
                match d.checked_mul(*q) {
                    Some(v) if v <= x => d = v,
                    _ => {
                        overflow = true;
                        break;
                    }
                }
            }
        }
        if overflow {
            continue;
        }
        let term = (x / d) as i128;
        if mask.count_ones() % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total as u64
}

/// An exact count checked against a main term and an error bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub exact: u64,
    pub main: Rational,
    pub bound: u64,
    pub pass: bool,
}

impl EnvelopeCheck {
    pub fn new(exact: u64, main: Rational, bound: u64) -> Self {
        let dev = (&Rational::from_integer(exact) - &main).abs();
        let pass = dev <= Rational::from_integer(bound);
        EnvelopeCheck {
            exact,
            main,
            bound,
            pass,
        }
    }
}

/// `|phi(t, x) - (x / t) phi(t)| <= d(t)`, evaluated exactly.
pub fn check_phi_partial_envelope(t: u64, x: &Rational) -> Result<EnvelopeCheck> {
    let exact = phi_partial(t, x)?;
    let main = x * &Rational::new(totient(t), t)?;
    Ok(EnvelopeCheck::new(exact, main, divisor_count(t)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumKind {
    Phi,
    Divcount,
    PhiCoprime,
    PhiMultiplePe,
    PhiValuation,
}

impl SumKind {
    pub const ALL: [SumKind; 5] = [
        SumKind::Phi,
        SumKind::Divcount,
        SumKind::PhiCoprime,
        SumKind::PhiMultiplePe,
        SumKind::PhiValuation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SumKind::Phi => "phi",
            SumKind::Divcount => "divcount",
            SumKind::PhiCoprime => "phi_coprime",
            SumKind::PhiMultiplePe => "phi_multiple_pe",
            SumKind::PhiValuation => "phi_valuation",
        }
    }

    pub fn needs_prime(self) -> bool {
        !matches!(self, SumKind::Phi | SumKind::Divcount)
    }

    pub fn needs_exponent(self) -> bool {
        matches!(self, SumKind::PhiMultiplePe | SumKind::PhiValuation)
    }
}

impl fmt::Display for SumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SumKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SumKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::parse(
                    "sum kind",
                    s,
                    "expected one of phi, divcount, phi_coprime, phi_multiple_pe, phi_valuation",
                )
            })
    }
}

/// An exact partial sum next to its asymptotic main term.
///
/// Decimal fields are rounded to 15 significant digits (`zeta2` to 40);
/// `ratio` is `abs_error / (T ln T)` and is absent at `T = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub kind: SumKind,
    #[serde(rename = "T")]
    pub t: u64,
    pub p: Option<u64>,
    pub e: Option<u32>,
    pub exact: u128,
    pub main: Decimal,
    pub abs_error: Decimal,
    pub rel_error: Option<Decimal>,
    pub ratio: Option<Decimal>,
    pub zeta2: Decimal,
}

impl AsymptoticReport {
    pub const CSV_HEADER: &'static str = "kind,T,p,e,exact,main,abs_error,ratio";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.kind,
            self.t,
            opt(self.p.map(|p| p.to_string())),
            opt(self.e.map(|e| e.to_string())),
            self.exact,
            self.main,
            self.abs_error,
            opt(self.ratio.as_ref().map(|r| r.to_string())),
        )
    }
}

/// Main-term coefficient `c` in `sum ~ c T^2 / (2 zeta(2))`.
fn quadratic_coefficient(kind: SumKind, p: Prime, e: u32) -> Rational {
    let pr = Rational::from_integer(p.get() as i64);
    let p_plus_1 = Rational::from_integer(p.get() as i64 + 1);
    let over = |num: Rational| num.checked_div(&p_plus_1).expect("p + 1 > 0");
    match kind {
        SumKind::Phi => Rational::one(),
        SumKind::PhiCoprime => over(pr),
        SumKind::PhiMultiplePe => over(p.pow(1 - e as i64)),
        SumKind::PhiValuation => over(p.pow(-(e as i64)) * (pr - Rational::one())),
        SumKind::Divcount => unreachable!("divisor sums are not quadratic"),
    }
}

pub fn asymptotic_report(
    tables: &SieveTables,
    kind: SumKind,
    t: u64,
    p: Option<Prime>,
    e: Option<u32>,
) -> Result<AsymptoticReport> {
    if t == 0 {
        return Err(Error::NonPositive { what: "T" });
    }
    let need_p = || p.ok_or_else(|| Error::parse("sum", kind.name(), "this sum needs a prime"));
    let need_e = || e.ok_or_else(|| Error::parse("sum", kind.name(), "this sum needs an exponent"));
    let exact = match kind {
        SumKind::Phi => tables.sum_phi(t)?,
        SumKind::Divcount => tables.sum_divcount(t)?,
        SumKind::PhiCoprime => tables.sum_phi_coprime(t, need_p()?)?,
        SumKind::PhiMultiplePe => tables.sum_phi_multiple_pe(t, need_p()?, need_e()?)?,
        SumKind::PhiValuation => tables.sum_phi_valuation(t, need_p()?, need_e()?)?,
    };
    let ln_t = Fixed::ln_u64(t);
    let main = match kind {
        SumKind::Divcount => &Fixed::from_int(t) * &ln_t,
        _ => {
            let coeff = quadratic_coefficient(kind, p.unwrap_or(Prime::new(2)?), e.unwrap_or(1));
            let t2 = Rational::from_integer(BigInt::from(t) * BigInt::from(t));
            let two_zeta = &Fixed::from_int(2) * &Fixed::zeta2();
            Fixed::from_rational(&(coeff * t2))
                .div(&two_zeta)
                .expect("zeta(2) is nonzero")
        }
    };
    let abs_error = (&Fixed::from_int(exact) - &main).abs();
    let rel_error = abs_error.div(&main).map(|r| r.round_sig(REPORT_DIGITS));
    let t_log_t = &Fixed::from_int(t) * &ln_t;
    let ratio = abs_error.div(&t_log_t).map(|r| r.round_sig(REPORT_DIGITS));
    Ok(AsymptoticReport {
        kind,
        t,
        p: kind.needs_prime().then(|| p.map(Prime::get)).flatten(),
        e: kind.needs_exponent().then_some(e).flatten(),
        exact,
        main: main.round_sig(REPORT_DIGITS),
        abs_error: abs_error.round_sig(REPORT_DIGITS),
        rel_error,
        ratio,
        zeta2: Fixed::zeta2().round_sig(40),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_integer::Integer;
    use proptest::prelude::*;

    fn gcd_phi(n: u64) -> u64 {
        (1..=n).filter(|k| k.gcd(&n) == 1).count() as u64
    }

    fn trial_divisors(n: u64) -> u64 {
        (1..=n).filter(|k| n.is_multiple_of(*k)).count() as u64
    }

    fn prime(p: u64) -> Prime {
        Prime::new(p).unwrap()
    }

    #[test]
    fn sieve_matches_oracles() {
        let s = SieveTables::build(2000).unwrap();
        for n in 1..=2000 {
            assert_eq!(s.phi(n), gcd_phi(n), "phi({n})");
            assert_eq!(s.divcount(n), trial_divisors(n), "d({n})");
            assert_eq!(s.phi(n), totient(n));
            assert_eq!(s.divcount(n), divisor_count(n));
        }
        assert_eq!(s.phi(10), 4);
        assert_eq!(s.divcount(12), 6);
        let one = SieveTables::build(1).unwrap();
        assert_eq!((one.phi(1), one.divcount(1)), (1, 1));
    }

    #[test]
    fn sieve_cap_is_enforced() {
        assert_eq!(
            SieveTables::build_with_cap(101, 100).unwrap_err(),
            Error::SieveCap {
                limit: 101,
                cap: 100
            }
        );
        assert!(SieveTables::build(0).is_err());
        let s = SieveTables::build(10).unwrap();
        assert!(s.sum_phi(11).is_err());
    }

    #[test]
    fn partial_totient_examples() {
        let x = |n: i64| Rational::from_integer(n);
        assert_eq!(phi_partial(6, &x(10)).unwrap(), 3);
        assert_eq!(phi_partial(1, &x(7)).unwrap(), 7);
        assert_eq!(phi_partial(5, &x(4)).unwrap(), 4);
        assert_eq!(phi_partial(6, &Rational::new(21, 2).unwrap()).unwrap(), 3);
        assert_eq!(phi_partial(6, &x(-3)).unwrap(), 0);
    }

    #[test]
    fn partial_totient_envelope_examples() {
        let x = |n: i64| Rational::from_integer(n);
        let c = check_phi_partial_envelope(6, &x(10)).unwrap();
        assert_eq!(
            (c.exact, c.main.clone(), c.bound, c.pass),
            (3, Rational::new(10, 3).unwrap(), 4, true)
        );
        let c = check_phi_partial_envelope(1, &x(9)).unwrap();
        assert_eq!(
            (c.exact, c.main.clone(), c.bound, c.pass),
            (9, x(9), 1, true)
        );
        let c = check_phi_partial_envelope(30, &x(30)).unwrap();
        assert_eq!(
            (c.exact, c.main.clone(), c.bound, c.pass),
            (8, x(8), 8, true)
        );
    }

    #[test]
    fn restricted_sum_examples() {
        let s = SieveTables::build(100).unwrap();
        let two = prime(2);
        assert_eq!(s.sum_phi(1).unwrap(), 1);
        assert_eq!(s.sum_phi(10).unwrap(), 32);
        assert_eq!(s.sum_divcount(10).unwrap(), 27);
        // phi over {1,3,5,7,9} = 1+2+4+6+6 and over {2,4,6,8,10} = 1+2+2+4+4
        assert_eq!(s.sum_phi_coprime(10, two).unwrap(), 19);
        assert_eq!(s.sum_phi_multiple_pe(10, two, 1).unwrap(), 13);
        assert_eq!(s.sum_phi_valuation(10, two, 1).unwrap(), 7);
        assert_eq!(s.sum_phi_multiple_pe(10, two, 4).unwrap(), 0);
        assert!(s.sum_phi_multiple_pe(10, two, 0).is_err());
    }

    #[test]
    fn small_sums_against_direct_summation() {
        let s = SieveTables::build(100).unwrap();
        let direct: u128 = (1..=100).map(|n| gcd_phi(n) as u128).sum();
        assert_eq!(s.sum_phi(100).unwrap(), direct);
        let r = asymptotic_report(&s, SumKind::Phi, 100, None, None).unwrap();
        let t_log_t = 2.0 * 100.0 * (100f64).ln();
        assert!(r.abs_error.to_rational().to_f64() <= t_log_t);
    }

    #[test]
    fn report_at_one() {
        let s = SieveTables::build(10).unwrap();
        let r = asymptotic_report(&s, SumKind::Phi, 1, None, None).unwrap();
        assert_eq!(r.exact, 1);
        assert_eq!(r.main.to_string(), "0.303963550927013");
        assert_eq!(r.ratio, None);
        assert_eq!(
            r.zeta2.to_string(),
            "1.644934066848226436472415166646025189219"
        );
    }

    #[test]
    fn report_ratios_at_ten_thousand() {
        let s = SieveTables::build(10_000).unwrap();
        let r = asymptotic_report(&s, SumKind::Phi, 10_000, None, None).unwrap();
        assert!(r.ratio.unwrap().to_rational() <= Rational::one());
        let r = asymptotic_report(&s, SumKind::PhiCoprime, 10_000, Some(prime(2)), None).unwrap();
        assert!(r.rel_error.unwrap().to_rational() <= Rational::new(1, 100).unwrap());
        assert!(asymptotic_report(&s, SumKind::PhiCoprime, 10, None, None).is_err());
    }

    #[test]
    fn report_json_and_csv() {
        let s = SieveTables::build(1000).unwrap();
        let r =
            asymptotic_report(&s, SumKind::PhiValuation, 1000, Some(prime(3)), Some(2)).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        let back: AsymptoticReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert!(r.csv_row().starts_with("phi_valuation,1000,3,2,"));
        assert_eq!(
            r.csv_row().split(',').count(),
            AsymptoticReport::CSV_HEADER.split(',').count()
        );
    }

    #[test]
    fn sum_identities() {
        let s = SieveTables::build(10_000).unwrap();
        for p in [2, 3, 5, 7] {
            let p = prime(p);
            for t in [1, 2, 17, 100, 999, 4096, 10_000] {
                let total = s.sum_phi(t).unwrap();
                assert_eq!(
                    total,
                    s.sum_phi_coprime(t, p).unwrap() + s.sum_phi_multiple_pe(t, p, 1).unwrap()
                );
                for e in 1..=4 {
                    let tail: u128 = (e..40).map(|k| s.sum_phi_valuation(t, p, k).unwrap()).sum();
                    assert_eq!(s.sum_phi_multiple_pe(t, p, e).unwrap(), tail);
                    // reindex n = p^(e-1) s with p | s
                    let scale = p.get().pow(e - 1);
                    let rhs: u128 = (1..=t / scale)
                        .filter(|m| m % p.get() == 0)
                        .map(|m| gcd_phi(m) as u128)
                        .sum::<u128>()
                        * scale as u128;
                    if t <= 1000 {
                        assert_eq!(s.sum_phi_multiple_pe(t, p, e).unwrap(), rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn scaling_identity_full_range() {
        let s = SieveTables::build(10_000).unwrap();
        for p in [2u64, 3, 5, 7] {
            let pr = prime(p);
            for e in 1..=4u32 {
                let scale = p.pow(e - 1);
                for t in (1..=10_000).step_by(97).chain([10_000]) {
                    let rhs: u128 = (1..=t / scale)
                        .filter(|m| m % p == 0)
                        .map(|m| s.phi(m) as u128)
                        .sum::<u128>()
                        * scale as u128;
                    assert_eq!(
                        s.sum_phi_multiple_pe(t, pr, e).unwrap(),
                        rhs,
                        "p={p} e={e} t={t}"
                    );
                }
            }
        }
    }

    #[test]
    fn totient_divisor_sum() {
        let s = SieveTables::build(10_000).unwrap();
        let mut acc = vec![0u64; 10_001];
        for d in 1..=10_000u64 {
            for m in (d..=10_000).step_by(d as usize) {
                acc[m as usize] += s.phi(d);
            }
        }
        for n in 1..=10_000u64 {
            assert_eq!(acc[n as usize], n);
        }
    }

    proptest! {
        #[test]
        fn totient_is_multiplicative(a in 1u64..3000, b in 1u64..3000) {
            prop_assume!(a.gcd(&b) == 1);
            prop_assert_eq!(totient(a * b), totient(a) * totient(b));
        }

        #[test]
        fn partial_totient_matches_enumeration(t in 1u64..500, x in 0u64..2000) {
            let direct = (1..=x).filter(|n| n.gcd(&t) == 1).count() as u64;
            prop_assert_eq!(phi_partial(t, &Rational::from_integer(x as i64)).unwrap(), direct);
        }
    }
}
