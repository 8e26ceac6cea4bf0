use num_integer::Integer;
use padic_height::counting::{
    count_valuation_progression, q_slice, q_slice_size, run_count_job, slice_count_by_enumeration,
    slice_count_exact, slice_main_term, standard_battery, CountJob,
};
use padic_height::{Ball, Exec, Prime, Rational, Region};
use proptest::prelude::*;

/// `v_p(m/n - a/b)` by cross-multiplying in `i128`, `None` for infinity.
fn diff_valuation(p: i128, (m, n): (i128, i128), (a, b): (i128, i128)) -> Option<i64> {
    let mut num = m * b - a * n;
    if num == 0 {
        return None;
    }
    let mut den = n * b;
    let mut v = 0;
    while num % p == 0 {
        num /= p;
        v += 1;
    }
    while den % p == 0 {
        den /= p;
        v -= 1;
    }
    Some(v)
}

/// Enumerates `Q(t)` by gcd and tests each member in `i128`.
fn oracle_count(p: u64, (a, b): (i128, i128), e: i64, t: u64) -> u64 {
    let t = t as i128;
    let inside =
        |m: i128, n: i128| diff_valuation(p as i128, (m, n), (a, b)).is_none_or(|v| v >= e);
    if t == 1 {
        return [(0, 1), (1, 1), (-1, 1)]
            .iter()
            .filter(|&&(m, n)| inside(m, n))
            .count() as u64;
    }
    let mut count = 0;
    for k in 1..=t {
        if k.gcd(&t) != 1 {
            continue;
        }
        for (m, n) in [(t, k), (-t, k), (k, t), (-k, t)] {
            count += inside(m, n) as u64;
        }
    }
    count
}

fn center_pair(b: &Ball) -> (i128, i128) {
    b.center().to_i128_pair().unwrap()
}

#[test]
fn fast_counts_match_independent_oracle_to_3000() {
    for b in standard_battery() {
        let (p, c, e) = (b.prime().get(), center_pair(&b), b.radius_exp());
        for t in 1..=3000 {
            assert_eq!(
                slice_count_exact(&b, t),
                oracle_count(p, c, e, t),
                "{b} t={t}"
            );
        }
    }
}

#[test]
fn fast_counts_match_exact_enumeration() {
    for b in standard_battery() {
        let region = Region::Ball(b.clone());
        for t in (1..=300).chain([997, 1024, 2310]) {
            assert_eq!(
                slice_count_exact(&b, t),
                slice_count_by_enumeration(&region, t),
                "{b} t={t}"
            );
        }
    }
}

#[test]
fn battery_envelopes_hold_to_3000() {
    for b in standard_battery() {
        let job = CountJob::new(b.clone(), 1, 3000, 1000).unwrap();
        let out = run_count_job(&job, &Exec::default());
        assert_eq!(out.summary.envelope_failures, 0, "{b}");
        let total: u64 = (1..=3000).map(q_slice_size).sum();
        assert_eq!(out.summary.denominator, total);
    }
}

#[test]
fn slice_main_terms_from_examples() {
    let two = Prime::new(2).unwrap();
    let s = slice_main_term(&Ball::new(two, Rational::from_integer(1), 1), 3);
    assert_eq!(
        (s.exact, s.main, s.bound),
        (4, Rational::from_integer(4), 16)
    );
    assert_eq!(q_slice(2).len(), 4);
}

proptest! {
    #[test]
    fn random_balls_match_oracle(
        p in prop::sample::select(vec![2u64, 3, 5, 7, 11]),
        a in -60i64..60,
        b in 1i64..60,
        e in -4i64..5,
        t in 1u64..400,
    ) {
        let ball = Ball::new(Prime::new(p).unwrap(), Rational::new(a, b).unwrap(), e);
        let c = center_pair(&ball);
        prop_assert_eq!(slice_count_exact(&ball, t), oracle_count(p, c, e, t));
    }

    #[test]
    fn progression_counts_match_direct_count(
        p in prop::sample::select(vec![2u64, 3, 5, 7]),
        t in 1u64..300,
        a in -200i64..200,
        d in 1i64..40,
        e in -3i64..6,
        bound in 1u64..2000,
    ) {
        let pr = Prime::new(p).unwrap();
        prop_assume!(d % p as i64 != 0);
        let a = Rational::new(a, d).unwrap();
        let (an, ad) = a.to_i128_pair().unwrap();
        let direct = (0..=bound as i128)
            .filter(|n| n.gcd(&(t as i128)) == 1)
            .filter(|&n| diff_valuation(p as i128, (n, 1), (an * t as i128, ad)).is_none_or(|v| v >= e))
            .count() as u64;
        prop_assert_eq!(count_valuation_progression(pr, t, &a, e, bound).unwrap(), direct);
    }
}
