//! `padic-height`: command-line access to the exact counts, closed-form
//! densities and verification suites.
//!
//! Exit status: 0 on success, 1 when a verification fails or an empirical
//! error exceeds its budget, 2 on any usage error. Output is assembled in
//! full before anything is written, so exit 2 never leaves partial output.

mod config;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use padic_height::arithfn::{asymptotic_report, AsymptoticReport, SieveTables, SumKind};
use padic_height::ball::parse_center;
use padic_height::counting::{slice_stats, standard_battery, SliceStat};
use padic_height::estimator::{
    empirical_mu, empirical_sphere, verify_partial_totient, verify_printed_sphere,
    verify_progressions, verify_slices, ConvergenceReport, RunOptions, VerificationReport,
};
use padic_height::measure::{BallSet, DensityReport, SphereReport, UnionReport};
use padic_height::{Ball, Exec, Prime, Rational};
use serde::Serialize;

use config::{CliConfig, Format, Overrides};

#[derive(Parser, Debug)]
#[command(
    name = "padic-height",
    version,
    about = "Height densities of p-adic balls"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output to this file instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// `key = value` configuration file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially, 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for the randomized suites.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct BallArgs {
    #[arg(short = 'p', long = "prime")]
    prime: u64,
    /// A rational such as `-3/4`, or p-adic digits `d0,d1,...@k`.
    #[arg(short = 'x', long = "center", allow_hyphen_values = true)]
    center: String,
    #[arg(short = 'e', long = "radius-exp", allow_negative_numbers = true)]
    e: i64,
}

impl BallArgs {
    fn resolve(&self) -> Result<(Prime, Rational, i64), String> {
        let p = Prime::new(self.prime).map_err(|e| e.to_string())?;
        let x = parse_center(p, &self.center).map_err(|e| e.to_string())?;
        Ok((p, x, self.e))
    }

    fn ball(&self) -> Result<Ball, String> {
        let (p, x, e) = self.resolve()?;
        Ok(Ball::new(p, x, e))
    }
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum Suite {
    Slices,
    #[value(name = "lemma1", alias = "progressions")]
    Progressions,
    #[value(name = "prop3", alias = "partial-totient")]
    PartialTotient,
    #[value(name = "corollary", alias = "printed-sphere")]
    PrintedSphere,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact density of a ball.
    Density(BallArgs),
    /// Exact density of the sphere `v(r - x) = e`, with the printed formula.
    Sphere(BallArgs),
    /// Fraction of rationals of height <= T inside a ball or sphere.
    Empirical {
        #[command(flatten)]
        ball: BallArgs,
        #[arg(short = 'T', long = "max-height", default_value_t = 1000)]
        t: u64,
        /// Checkpoint spacing; defaults to T / 10.
        #[arg(long)]
        stride: Option<u64>,
        /// Count the sphere at `e` instead of the ball.
        #[arg(long)]
        sphere: bool,
    },
    /// Slice count at height t (or t..=t-to) against its main term.
    Slice {
        #[command(flatten)]
        ball: BallArgs,
        #[arg(short = 't')]
        t: u64,
        #[arg(long = "t-to")]
        t_to: Option<u64>,
    },
    /// Run a verification suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        /// Largest height for `slices`.
        #[arg(long = "t-max", default_value_t = 3000)]
        t_max: u64,
        /// Instances for the randomized suites.
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
    },
    /// A totient or divisor partial sum against its main term.
    Sums {
        /// phi, divcount, phi_coprime, phi_multiple_pe or phi_valuation.
        kind: String,
        #[arg(short = 'T', long = "max-height")]
        t: u64,
        #[arg(short = 'p', long = "prime")]
        prime: Option<u64>,
        #[arg(short = 'e', long = "exponent")]
        e: Option<u32>,
    },
    /// Density of a union of balls over one prime.
    Union {
        #[arg(short = 'p', long = "prime")]
        prime: u64,
        /// `CENTER:E`, repeatable.
        #[arg(
            short = 'b',
            long = "ball",
            required = true,
            allow_hyphen_values = true
        )]
        balls: Vec<String>,
    },
}

struct Rendered {
    text: String,
    ok: bool,
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = format!("{header}\n");
    for row in rows {
        s.push_str(&row);
        s.push('\n');
    }
    s
}

fn render<T: Serialize>(
    cfg: &CliConfig,
    value: &T,
    header: &str,
    rows: impl IntoIterator<Item = String>,
) -> String {
    match cfg.format {
        Format::Json => json(value),
        Format::Csv => csv(header, rows),
    }
}

fn parse_ball_spec(p: Prime, spec: &str) -> Result<Ball, String> {
    let (center, e) = spec
        .rsplit_once(':')
        .ok_or_else(|| format!("ball {spec:?} must look like CENTER:E"))?;
    let x = parse_center(p, center).map_err(|e| e.to_string())?;
    let e: i64 = e
        .trim()
        .parse()
        .map_err(|_| format!("ball {spec:?}: radius exponent must be an integer"))?;
    Ok(Ball::new(p, x, e))
}

fn run(command: &Command, cfg: &CliConfig) -> Result<Rendered, String> {
    let exec = Exec::with_workers(cfg.workers);
    let opts = RunOptions {
        exec,
        t_max: cfg.t_max,
        error_constant: cfg.error_constant,
    };
    let ok = |text| Ok(Rendered { text, ok: true });
    match command {
        Command::Density(args) => {
            let r = DensityReport::new(&args.ball()?);
            ok(render(cfg, &r, DensityReport::CSV_HEADER, [r.csv_row()]))
        }
        Command::Sphere(args) => {
            let (p, x, e) = args.resolve()?;
            let r = SphereReport::new(p, &x, e);
            ok(render(cfg, &r, SphereReport::CSV_HEADER, [r.csv_row()]))
        }
        Command::Empirical {
            ball,
            t,
            stride,
            sphere,
        } => {
            let (p, x, e) = ball.resolve()?;
            let stride = stride.unwrap_or((t / 10).max(1));
            let report: ConvergenceReport = if *sphere {
                empirical_sphere(p, &x, e, *t, stride, &opts)
            } else {
                empirical_mu(&Ball::new(p, x, e), *t, stride, &opts)
            }
            .map_err(|e| e.to_string())?;
            Ok(Rendered {
                text: render(
                    cfg,
                    &report,
                    ConvergenceReport::CSV_HEADER,
                    report.csv_rows(),
                ),
                ok: report.within_budget,
            })
        }
        Command::Slice { ball, t, t_to } => {
            let b = ball.ball()?;
            if *t == 0 {
                return Err("t must be positive".into());
            }
            let stats: Vec<SliceStat> = match t_to {
                None => slice_stats(&b, *t, *t, &exec),
                Some(to) if to < t => return Err(format!("--t-to {to} is below -t {t}")),
                Some(to) if *to > cfg.t_max => {
                    return Err(format!(
                        "height {to} exceeds the compute budget {}",
                        cfg.t_max
                    ))
                }
                Some(to) => slice_stats(&b, *t, *to, &exec),
            };
            let rows = stats.iter().map(SliceStat::csv_row).collect::<Vec<_>>();
            let text = match (cfg.format, t_to) {
                (Format::Json, None) => json(&stats[0]),
                (Format::Json, Some(_)) => json(&stats),
                (Format::Csv, _) => csv(SliceStat::CSV_HEADER, rows),
            };
            ok(text)
        }
        Command::Verify {
            suite,
            t_max,
            samples,
        } => {
            let report: VerificationReport = match suite {
                Suite::Slices => {
                    if *t_max > cfg.t_max {
                        return Err(format!(
                            "height {t_max} exceeds the compute budget {}",
                            cfg.t_max
                        ));
                    }
                    verify_slices(&standard_battery(), *t_max, &exec)
                }
                Suite::Progressions => verify_progressions(*samples, cfg.seed, &exec),
                Suite::PartialTotient => verify_partial_totient(*samples, cfg.seed, &exec),
                Suite::PrintedSphere => verify_printed_sphere(),
            };
            Ok(Rendered {
                text: render(
                    cfg,
                    &report,
                    VerificationReport::CSV_HEADER,
                    [report.csv_row()],
                ),
                ok: report.pass,
            })
        }
        Command::Sums { kind, t, prime, e } => {
            let kind: SumKind = kind
                .parse()
                .map_err(|e: padic_height::Error| e.to_string())?;
            let p = prime
                .map(Prime::new)
                .transpose()
                .map_err(|e| e.to_string())?;
            let tables =
                SieveTables::build_with_cap(*t, cfg.sieve_cap).map_err(|e| e.to_string())?;
            let r = asymptotic_report(&tables, kind, *t, p, *e).map_err(|e| e.to_string())?;
            ok(render(cfg, &r, AsymptoticReport::CSV_HEADER, [r.csv_row()]))
        }
        Command::Union { prime, balls } => {
            let p = Prime::new(*prime).map_err(|e| e.to_string())?;
            let parsed = balls
                .iter()
                .map(|s| parse_ball_spec(p, s))
                .collect::<Result<Vec<_>, _>>()?;
            let set = BallSet::from_balls(p, parsed).map_err(|e| e.to_string())?;
            let r = UnionReport::new(&set);
            ok(render(cfg, &r, UnionReport::CSV_HEADER, [r.csv_row()]))
        }
    }
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let overrides = Overrides {
        format: cli.global.format,
        output: cli.global.output.clone(),
        workers: cli.global.workers,
        seed: cli.global.seed,
    };
    let cfg = match CliConfig::load(cli.global.config.as_deref(), overrides) {
        Ok(cfg) => cfg,
        Err(msg) => return usage_error(&msg),
    };
    let rendered = match run(&cli.command, &cfg) {
        Ok(r) => r,
        Err(msg) => return usage_error(&msg),
    };
    let written = match &cfg.output {
        Some(path) => fs::write(path, &rendered.text)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout()
            .lock()
            .write_all(rendered.text.as_bytes())
            .map_err(|e| e.to_string()),
    };
    if let Err(msg) = written {
        return usage_error(&msg);
    }
    if rendered.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
