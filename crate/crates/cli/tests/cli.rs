use std::fs;
use std::process::{Command, Output};

use padic_height::arithfn::AsymptoticReport;
use padic_height::counting::SliceStat;
use padic_height::estimator::{ConvergenceReport, VerificationReport};
use padic_height::measure::{DensityReport, SphereReport, UnionReport};
use padic_height::Rational;
use serde::de::DeserializeOwned;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_padic-height"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

/// Parses stdout and checks it survives a serialize/parse cycle unchanged.
fn parsed<T: DeserializeOwned + serde::Serialize + PartialEq + std::fmt::Debug>(out: &Output) -> T {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let value: T = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}"));
    let again: T = serde_json::from_str(&serde_json::to_string(&value).unwrap()).unwrap();
    assert_eq!(again, value);
    value
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d).unwrap()
}

#[test]
fn density_examples() {
    for (x, e, want) in [
        ("0", "1", q(1, 3)),
        ("1/2", "1", q(1, 12)),
        ("0", "0", q(2, 3)),
    ] {
        let out = run(&["density", "-p", "2", "-x", x, "-e", e]);
        assert_eq!(code(&out), 0);
        let r: DensityReport = parsed(&out);
        assert_eq!(r.value, want);
    }
    let out = run(&[
        "density", "-p", "2", "-x", "0", "-e", "1", "--format", "csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text,
        "p,center,e,num,den,decimal,formula_tag\n2,0,1,1,3,0.333333333333333,origin_small\n"
    );
}

#[test]
fn centers_accept_digits_and_signs() {
    let out = run(&["density", "-p", "2", "-x", "1,0,1@-2", "-e", "-1"]);
    let r: DensityReport = parsed(&out);
    assert_eq!(r.ball.center(), &q(1, 4));
    let out = run(&["density", "-p", "3", "-x", "-1/3", "-e", "-2"]);
    assert_eq!(code(&out), 0);
    let out = run(&["density", "-p", "2", "-x", "1,2@0", "-e", "1"]);
    assert_eq!(code(&out), 2);
    assert!(out.stdout.is_empty());
    let out = run(&["density", "-p", "4", "-x", "0", "-e", "1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn empirical_converges() {
    let out = run(&["empirical", "-p", "2", "-x", "0", "-e", "1", "-T", "10000"]);
    assert_eq!(code(&out), 0);
    let r: ConvergenceReport = parsed(&out);
    let err = (&r.final_empirical().unwrap() - &q(1, 3)).abs();
    assert!(err <= q(1, 100));
    assert_eq!(r.checkpoints.len(), 10);
}

#[test]
fn empirical_rejects_bad_bounds() {
    let out = run(&["empirical", "-p", "2", "-x", "0", "-e", "1", "-T", "0"]);
    assert_eq!(code(&out), 2);
    assert!(out.stdout.is_empty());
    let out = run(&["empirical", "-p", "2", "-x", "0", "-e", "1", "-T", "200000"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8(out.stderr).unwrap().contains("100000"));
}

#[test]
fn empirical_error_budget_sets_exit_code() {
    // at T = 1 the budget c ln T / T is zero
    let out = run(&["empirical", "-p", "3", "-x", "0", "-e", "0", "-T", "1"]);
    assert_eq!(code(&out), 1);
    let r: ConvergenceReport = parsed(&out);
    assert!(!r.within_budget);
}

#[test]
fn empirical_sphere_carries_adjudication() {
    let out = run(&["empirical", "-p", "3", "-x", "1/3", "-e", "-1", "--sphere"]);
    assert_eq!(code(&out), 0);
    let r: ConvergenceReport = parsed(&out);
    let printed = r.printed.unwrap();
    assert_eq!(printed.value, q(1, 6));
    assert!(!printed.consistent);
    assert_eq!(r.closed_form.value, q(5, 6));
}

#[test]
fn sphere_command() {
    let out = run(&["sphere", "-p", "2", "-x", "1/4", "-e", "-1"]);
    let r: SphereReport = parsed(&out);
    assert_eq!((r.value, r.printed.value), (q(1, 24), q(-7, 12)));
}

#[test]
fn slice_command() {
    let out = run(&["slice", "-p", "2", "-x", "1", "-e", "1", "-t", "3"]);
    assert_eq!(code(&out), 0);
    let s: SliceStat = parsed(&out);
    assert_eq!((s.exact, s.main, s.bound), (4, q(4, 1), 16));
    let out = run(&[
        "slice", "-p", "2", "-x", "1", "-e", "1", "-t", "3", "--t-to", "12",
    ]);
    let all: Vec<SliceStat> = parsed(&out);
    assert_eq!(all.len(), 10);
    let out = run(&[
        "slice", "-p", "2", "-x", "1", "-e", "1", "-t", "5", "--t-to", "4",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_suites() {
    let out = run(&["verify", "slices", "--t-max", "3000"]);
    assert_eq!(code(&out), 0);
    let r: VerificationReport = parsed(&out);
    assert!(r.pass && r.cases > 0);

    let out = run(&["verify", "lemma1", "--samples", "500", "--seed", "3"]);
    assert_eq!(code(&out), 0);
    let a: VerificationReport = parsed(&out);
    let out = run(&[
        "verify",
        "lemma1",
        "--samples",
        "500",
        "--seed",
        "3",
        "--workers",
        "1",
    ]);
    assert_eq!(parsed::<VerificationReport>(&out), a);

    let out = run(&["verify", "prop3", "--samples", "500", "--format", "csv"]);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "suite,cases,failures,flagged,pass\npartial_totient,500,0,0,true\n"
    );

    let out = run(&["verify", "corollary"]);
    let r: VerificationReport = parsed(&out);
    assert!(r.pass && r.flagged > 0);

    let out = run(&["verify", "nonsense"]);
    assert_eq!(code(&out), 2);
    assert!(out.stdout.is_empty());
}

#[test]
fn sums_command() {
    let out = run(&["sums", "phi", "-T", "1000000"]);
    assert_eq!(code(&out), 0);
    let r: AsymptoticReport = parsed(&out);
    assert!(r.ratio.unwrap().to_rational() <= Rational::one());

    let out = run(&["sums", "phi_valuation", "-T", "1000", "-p", "3", "-e", "2"]);
    let r: AsymptoticReport = parsed(&out);
    assert_eq!((r.p, r.e), (Some(3), Some(2)));

    assert_eq!(code(&run(&["sums", "phi_squared", "-T", "10"])), 2);
    assert_eq!(code(&run(&["sums", "phi_coprime", "-T", "10"])), 2);
    assert_eq!(code(&run(&["sums", "phi", "-T", "20000000"])), 2);
}

#[test]
fn union_command() {
    let out = run(&["union", "-p", "2", "-b", "0:1", "-b", "1:1"]);
    let r: UnionReport = parsed(&out);
    assert_eq!(r.value, q(2, 3));
    let out = run(&["union", "-p", "2", "-b", "0:1", "-b", "0:0"]);
    let r: UnionReport = parsed(&out);
    assert_eq!((r.balls.len(), r.value), (1, q(2, 3)));
    let out = run(&["union", "-p", "3", "-b", "0:0"]);
    assert_eq!(parsed::<UnionReport>(&out).value, q(3, 4));
    assert_eq!(code(&run(&["union", "-p", "2", "-b", "0"])), 2);
    assert_eq!(code(&run(&["union", "-p", "2"])), 2);
}

#[test]
fn config_file_and_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    let dest = dir.path().join("report.csv");
    fs::write(
        &cfg,
        format!("format = csv\nt_max = 500\noutput = {}\n", dest.display()),
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();

    let out = run(&["--config", cfg, "density", "-p", "2", "-x", "0", "-e", "1"]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    assert!(fs::read_to_string(&dest).unwrap().starts_with("p,center,e"));

    let other = dir.path().join("flag.json");
    let out = run(&[
        "density",
        "-p",
        "2",
        "-x",
        "0",
        "-e",
        "1",
        "--config",
        cfg,
        "--format",
        "json",
        "--output",
        other.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let r: DensityReport = serde_json::from_str(&fs::read_to_string(&other).unwrap()).unwrap();
    assert_eq!(r.value, q(1, 3));

    let out = run(&[
        "--config",
        cfg,
        "empirical",
        "-p",
        "2",
        "-x",
        "0",
        "-e",
        "1",
        "-T",
        "600",
    ]);
    assert_eq!(code(&out), 2);

    let bad = dir.path().join("bad.conf");
    fs::write(&bad, "colour = red\n").unwrap();
    let out = run(&[
        "--config",
        bad.to_str().unwrap(),
        "density",
        "-p",
        "2",
        "-x",
        "0",
        "-e",
        "1",
    ]);
    assert_eq!(code(&out), 2);
    assert!(out.stdout.is_empty());
}
