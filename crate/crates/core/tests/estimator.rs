use padic_height::counting::{standard_battery, Checkpoint};
use padic_height::estimator::{empirical_mu, empirical_sphere, ConvergenceReport, RunOptions};
use padic_height::{Ball, ExtendedValuation, Fixed, Prime, Rational};

fn opts() -> RunOptions {
    RunOptions::default()
}

#[test]
fn battery_converges_within_log_budget() {
    for b in standard_battery() {
        for t in [1_000u64, 10_000] {
            let r = empirical_mu(&b, t, t, &opts()).unwrap();
            let err =
                Fixed::from_rational(&(&r.final_empirical().unwrap() - &r.closed_form.value).abs());
            let budget = (&Fixed::from_int(50) * &Fixed::ln_u64(t))
                .div(&Fixed::from_int(t))
                .unwrap();
            assert!(err <= budget, "{b} T={t}");
            assert!(r.within_budget);
        }
    }
}

#[test]
fn spheres_and_ball_exhaust_all_heights() {
    const T: u64 = 3000;
    let stride = 500;
    for b in standard_battery()
        .into_iter()
        .filter(|b| b.center_valuation() == ExtendedValuation::Infinity)
    {
        let p = b.prime();
        let zero = Rational::zero();
        // heights <= T have |v| <= log_p T
        let lowest = -((T as f64).ln() / (p.get() as f64).ln()).ceil() as i64;
        let ball = empirical_mu(&b, T, stride, &opts()).unwrap();
        let spheres: Vec<ConvergenceReport> = (lowest..b.radius_exp())
            .map(|e| empirical_sphere(p, &zero, e, T, stride, &opts()).unwrap())
            .collect();
        for (i, row) in ball.checkpoints.iter().enumerate() {
            let rest: u64 = spheres.iter().map(|s| s.checkpoints[i].numerator).sum();
            assert_eq!(row.numerator + rest, row.denominator, "{b} T={}", row.t);
        }
    }
}

#[test]
fn examples_at_ten_thousand() {
    let two = Prime::new(2).unwrap();
    let tol = Rational::new(1, 100).unwrap();
    let cases = [
        (Rational::zero(), 2i64, Rational::new(1, 12).unwrap()),
        (
            Rational::new(1, 2).unwrap(),
            -1,
            Rational::new(2, 3).unwrap(),
        ),
    ];
    for (x, e, want) in cases {
        let r = empirical_sphere(two, &x, e, 10_000, 10_000, &opts()).unwrap();
        assert!((&r.final_empirical().unwrap() - &want).abs() <= tol);
    }
    let b = Ball::new(two, Rational::new(1, 2).unwrap(), 0);
    let r = empirical_mu(&b, 10_000, 1000, &opts()).unwrap();
    assert_eq!(r.checkpoints.len(), 10);
    assert!((&r.final_empirical().unwrap() - &Rational::new(1, 6).unwrap()).abs() <= tol);
}

#[test]
fn report_json_roundtrip() {
    let b = Ball::new(Prime::new(3).unwrap(), Rational::new(1, 9).unwrap(), 1);
    let r = empirical_mu(&b, 500, 100, &opts()).unwrap();
    let json = serde_json::to_string_pretty(&r).unwrap();
    assert_eq!(serde_json::from_str::<ConvergenceReport>(&json).unwrap(), r);
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    let cp: Checkpoint = serde_json::from_value(value["checkpoints"][0].clone()).unwrap();
    assert_eq!(cp.t, 100);
}
