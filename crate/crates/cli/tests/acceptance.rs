//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines print in order and unbuffered.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ppcf::corpus;
use ppcf::harness::{cdf_sets, soundness_trace};
use ppcf::operational::sample_runs;
use ppcf::stability::{delta_signed, iterated_delta, Sign, DEFAULT_GRID, DEFAULT_SLACK};
use ppcf::*;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn ppcf_cli(args: &[&str]) -> (bool, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_ppcf"))
        .args(args)
        .env_remove("PPCF_SEED")
        .output()
        .expect("failed to start ppcf");
    (out.status.success(), out.stdout)
}

fn denote(src: &str) -> Measure {
    Interpreter::default().denote(&parse_term(src).unwrap()).unwrap()
}

fn mass(m: &Measure, u: &IntervalSet) -> f64 {
    m.mass(u, &QuadratureConfig::default()).unwrap()
}

fn adequacy(src: &str, intervals: Vec<IntervalSet>) -> AdequacyReport {
    let cfg = AdequacyConfig::with_intervals(intervals);
    adequacy_check(&parse(src).unwrap(), &cfg).unwrap()
}

fn worst_margin(r: &AdequacyReport) -> String {
    let worst = r
        .queries
        .iter()
        .map(|q| (q.denotational_mass.unwrap_or(f64::NAN) - q.empirical_mass).abs() / q.dkw_bound)
        .fold(0.0, f64::max);
    format!("largest |gap|/DKW = {worst:.3}, DKW = {:.6}", r.queries[0].dkw_bound)
}

/// Criterion 1: exact Dirac arithmetic through the binary.
fn dirac_arithmetic() -> Outcome {
    let (ok, out) = ppcf_cli(&["denote", "3 + 2", "--intervals", "{5}", "--intervals", "(-inf,5) + (5,inf)"]);
    let json: serde_json::Value = serde_json::from_slice(&out).unwrap();
    let on = json["masses"][0]["mass"].as_f64().unwrap();
    let off = json["masses"][1]["mass"].as_f64().unwrap();
    check(ok && on == 1.0 && off == 0.0, format!("mass {on} on {{5}}, {off} elsewhere"))
}

/// Criterion 2: call-by-name duplicates the draw, `let` shares it.
fn let_versus_name() -> Outcome {
    let cbn = mass(&denote("(fun x : real -> x = x) sample"), &IntervalSet::point(0.0));
    let by_let = mass(&denote("let x = sample in x = x"), &IntervalSet::point(1.0));
    let runs = sample_runs(
        &parse_term("let x = sample in x = x").unwrap(),
        10_000,
        10_000,
        harness::DEFAULT_SEED,
        PrimitiveTable::standard(),
    );
    let ones = runs.hits(&IntervalSet::point(1.0));
    check(
        cbn == 1.0 && by_let == 1.0 && ones == 10_000,
        format!("name-passing {{0}}: {cbn}, let {{1}}: {by_let}, let runs returning 1: {ones}/10000"),
    )
}

/// Criterion 3: Bernoulli masses and adequacy at 10⁵ runs.
fn bernoulli() -> Outcome {
    let m = denote("#bernoulli 0.3");
    let (zero, one) = (mass(&m, &IntervalSet::point(0.0)), mass(&m, &IntervalSet::point(1.0)));
    let r = adequacy("#bernoulli 0.3", vec![IntervalSet::point(0.0), IntervalSet::point(1.0)]);
    check(
        zero == 0.7 && one == 0.3 && r.pass && r.stats.runs == 100_000,
        format!("masses ({zero}, {one}), adequacy {}, {}", r.pass, worst_margin(&r)),
    )
}

/// Criterion 4: exponential and normal CDFs on 20 points, and adequacy on
/// the same CDF sets (the DKW band holds for all of them at once).
fn continuous_cdfs() -> Outcome {
    const TOL: f64 = 1e-6;
    let phi = Normal::standard();
    let mut worst: f64 = 0.0;
    let exp_sets = cdf_sets(0.0, 5.0, 19);
    let m = denote("#exponential");
    for u in &exp_sets {
        let x = u.intervals()[0].hi;
        worst = worst.max((mass(&m, u) - (1.0 - (-x).exp())).abs());
    }
    let normal_sets = cdf_sets(-3.0, 3.0, 19);
    let m = denote("#normal");
    for u in &normal_sets {
        let x = u.intervals()[0].hi;
        worst = worst.max((mass(&m, u) - phi.cdf(x)).abs());
    }
    let r_exp = adequacy("#exponential", exp_sets);
    let r_norm = adequacy("#normal", normal_sets);
    check(
        worst <= TOL && r_exp.pass && r_norm.pass,
        format!(
            "max CDF error {worst:.2e}; adequacy exponential {} ({}), normal {} ({})",
            r_exp.pass,
            worst_margin(&r_exp),
            r_norm.pass,
            worst_margin(&r_norm)
        ),
    )
}

/// Criterion 5: conditioning on a positive-mass set, and on a null set.
fn conditioning() -> Outcome {
    let v = mass(&denote("#observe[[0,0.5]] sample"), &IntervalSet::closed(0.0, 0.25));
    let null = "#observe[[2,3]] sample";
    let zero = denote(null);
    let total = mass(&zero, &IntervalSet::real());
    let runs = sample_runs(&parse_term(null).unwrap(), 2_000, 10_000, harness::DEFAULT_SEED, PrimitiveTable::standard());
    let frac = runs.exhausted_fraction();
    check(
        (v - 0.5).abs() <= 1e-6 && zero.is_zero() && total == 0.0 && frac >= 0.99,
        format!("mass on [0,0.25] = {v:.9}; null set: zero measure {}, exhausted runs {:.1}%", zero.is_zero(), 100.0 * frac),
    )
}

/// `P(u₁ + u₂ + u₃ ≤ 1)` by brute-force convolution of three discrete
/// uniforms on the midpoints of `n` cells.
fn irwin_hall_oracle(n: usize) -> f64 {
    let one = vec![1.0 / n as f64; n];
    let conv = |a: &[f64], b: &[f64]| {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    };
    conv(&conv(&one, &one), &one)
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as f64 + 1.5) / n as f64 <= 1.0)
        .map(|(_, p)| p)
        .sum()
}

/// Criterion 6: the average of three draws.
fn expectation() -> Outcome {
    let m = denote("#expectation_3 (fun x : real -> x) sample");
    let half = mass(&m, &IntervalSet::closed(0.0, 0.5));
    let third = mass(&m, &IntervalSet::closed(0.0, 1.0 / 3.0));
    let oracle = irwin_hall_oracle(1000);
    check(
        (half - 0.5).abs() <= 1e-4 && (third - oracle).abs() <= 1e-4,
        format!("[0,1/2]: {half:.8}; [0,1/3]: {third:.8} vs oracle {oracle:.8}"),
    )
}

/// Criterion 7: denotations are invariant along reduction paths.
fn soundness() -> Outcome {
    const STEP_TOL: f64 = 2e-6;
    let probes = corpus::probe_sets();
    let interp = Interpreter::default();
    let results: Vec<_> = corpus::PROGRAMS
        .par_iter()
        .map(|p| {
            let t = parse(p.source).unwrap().closed_main();
            // Quadrature error of the outer integral plus that of each side.
            let inner = QuadratureConfig::default().abs_tol + if t.contains_fix() { interp.fix.mass_tol } else { 0.0 };
            let sample_tol = 2.0 * (1e-7 + inner);
            (p.name, soundness_trace(&interp, &t, &probes, 25), sample_tol)
        })
        .collect();
    let mut failures = Vec::new();
    let (mut steps, mut samples, mut worst_step, mut worst_sample) = (0, 0, 0.0f64, 0.0f64);
    for (name, trace, sample_tol) in results {
        match trace {
            Err(e) => failures.push(format!("{name}: {e}")),
            Ok(trace) => {
                for s in &trace.steps {
                    steps += 1;
                    worst_step = worst_step.max(s.max_change);
                    if s.max_change > STEP_TOL {
                        failures.push(format!("{name}: {} step changed masses by {:.2e}", s.redex, s.max_change));
                    }
                }
                if let Some(g) = trace.sample_gap {
                    samples += 1;
                    worst_sample = worst_sample.max(g);
                    if g > sample_tol {
                        failures.push(format!("{name}: sample identity off by {g:.2e}"));
                    }
                }
            }
        }
    }
    let n = corpus::PROGRAMS.len();
    check(
        failures.is_empty() && n >= 50,
        format!(
            "{n} programs, {steps} deterministic steps (max change {worst_step:.2e}), {samples} sample identities (max gap {worst_sample:.2e}){}",
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join("; ")) }
        ),
    )
}

/// Criterion 8: the grid check and the agreement of the two difference
/// computations.
fn stability() -> Outcome {
    let wpor = check_pre_stable(&PointFn::wpor(), 1, DEFAULT_GRID, DEFAULT_SLACK);
    let witness = wpor
        .violations
        .iter()
        .any(|v| v.delta_minus == 1.5 && v.delta_plus == 1.0);
    let polys = [
        PointFn::identity(),
        PointFn::polynomial(&[0.0, 0.0, 1.0]),
        PointFn::polynomial(&[0.1, 0.5, 0.0, 0.3, 0.2]),
        PointFn::polynomial(&[0.0, 0.0, 0.0, 0.0, 1.0]),
    ];
    let accepted = polys
        .iter()
        .all(|f| (0..=4).all(|n| check_pre_stable(f, n, DEFAULT_GRID, DEFAULT_SLACK).passed()));

    let fns = [
        PointFn::wpor(),
        PointFn::polynomial(&[0.3, -1.0, 2.0, -0.5]),
        PointFn::new(2, "x*y", |x| x[0] * x[1]),
        PointFn::new(3, "sin", |x| (x[0] + 2.0 * x[1] - x[2]).sin()),
    ];
    let mut rng = RngStream::new(0xacce, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let f = &fns[(rng.next_u64() % fns.len() as u64) as usize];
        let m = (rng.next_u64() % 6) as usize;
        let x: Vec<f64> = (0..f.k).map(|_| rng.uniform() * 0.5).collect();
        let us: Vec<Vec<f64>> = (0..m).map(|_| (0..f.k).map(|_| rng.uniform() * 0.5 / m as f64).collect()).collect();
        let plus = delta_signed(f, &x, &us, Sign::Plus).unwrap();
        let minus = delta_signed(f, &x, &us, Sign::Minus).unwrap();
        worst = worst.max((plus - minus - iterated_delta(f, &x, &us).unwrap()).abs());
    }
    check(
        !wpor.passed() && witness && accepted && worst <= 1e-10,
        format!(
            "wpor rejected with witness (1.5 > 1): {witness}; identity and polynomials accepted for n ≤ 4: {accepted}; max path disagreement {worst:.1e}"
        ),
    )
}

/// Criterion 9: identical seeds give identical reports.
fn reproducibility() -> Outcome {
    let args = ["check", "#gaussian 1 2", "--cdf=-3:5:8", "--runs", "20000", "--seed", "7"];
    let (ok1, a) = ppcf_cli(&args);
    let (ok2, b) = ppcf_cli(&args);
    let (_, other) = ppcf_cli(&["check", "#gaussian 1 2", "--cdf=-3:5:8", "--runs", "20000", "--seed", "8"]);
    check(
        ok1 && ok2 && a == b && !a.is_empty() && a != other,
        format!("{} bytes, identical: {}, another seed differs: {}", a.len(), a == b, a != other),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("dirac arithmetic", Some(Duration::from_secs(1)), dirac_arithmetic),
        ("let versus call-by-name", Some(Duration::from_secs(5)), let_versus_name),
        ("bernoulli", Some(Duration::from_secs(30)), bernoulli),
        ("exponential and normal", Some(Duration::from_secs(120)), continuous_cdfs),
        ("conditioning", None, conditioning),
        ("monte-carlo expectation", None, expectation),
        ("soundness invariants", None, soundness),
        ("stability", Some(Duration::from_secs(60)), stability),
        ("reproducibility", None, reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let pass = outcome.pass && in_time;
        failed += !pass as usize;
        let budget = limit.map_or(String::new(), |l| format!(" of {}s", l.as_secs()));
        println!(
            "criterion {} {:<26} {} ({:.2}s{budget}) {}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            outcome.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
