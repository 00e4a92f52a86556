use ppcf::denotational::{kleene_iterates, let_bind, zero_of};
use ppcf::harness::{adequacy_check_with, cdf_sets, grid_cells};
use ppcf::operational::{
    decompose, dkw_bound, estimate_mass, run, step, Decomposition, Outcome, RedexKind, RngStream,
};
use ppcf::stability::{check_pre_stable, delta_signed, iterated_delta, Sign, DEFAULT_GRID, DEFAULT_SLACK};
use ppcf::syntax::sugar::{bernoulli, if_real, observe};
use ppcf::*;
use statrs::distribution::{ContinuousCDF, Normal};

fn quad() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn term(src: &str) -> Term {
    parse_term(src).unwrap_or_else(|e| panic!("{src}: {e}"))
}

fn denote(src: &str) -> Measure {
    Interpreter::default().denote(&term(src)).unwrap()
}

fn mass(m: &Measure, u: &IntervalSet) -> f64 {
    m.mass(u, &quad()).unwrap()
}

fn set(s: &str) -> IntervalSet {
    s.parse().unwrap()
}

fn empty() -> TypingContext {
    TypingContext::new()
}

// ---- typing and substitution

#[test]
fn typing_examples() {
    assert_eq!(typecheck(&empty(), &Term::sample()).unwrap(), Type::Real);
    let id = Term::abs("x", Type::Real, Term::var("x"));
    assert_eq!(typecheck(&empty(), &id).unwrap(), Type::arrow(Type::Real, Type::Real));
    assert!(typecheck(&empty(), &Term::app(Term::num(3.0), Term::num(4.0))).is_err());
}

#[test]
fn substitution_examples() {
    let eq = term("x = x");
    assert!(alpha_eq(&substitute(&eq, "x", &Term::num(3.0)), &term("3 = 3")));

    let t = Term::abs("x", Type::arrow(Type::Real, Type::Real), Term::app(Term::var("x"), Term::var("y")));
    let expected = Term::abs("x", Type::arrow(Type::Real, Type::Real), Term::app(Term::var("x"), Term::var("z")));
    assert!(alpha_eq(&substitute(&t, "y", &Term::var("z")), &expected));

    // Capture avoidance renames the binder.
    let t = Term::abs("y", Type::Real, Term::var("x"));
    let out = substitute(&t, "x", &Term::var("y"));
    let TermKind::Abs(binder, _, body) = out.kind() else { panic!("{out}") };
    assert_ne!(binder.as_ref(), "y");
    assert_eq!(body.kind(), &TermKind::Var("y".into()));
}

#[test]
fn sugar_shapes() {
    let u = set("[0,0.5]");
    let obs = observe(u.clone());
    let TermKind::Abs(m, _, body) = obs.kind() else { panic!("{obs}") };
    let TermKind::Fix(f) = body.kind() else { panic!("{body}") };
    let TermKind::Abs(_, _, inner) = f.kind() else { panic!("{f}") };
    let TermKind::Let(_, bound, _) = inner.kind() else { panic!("{inner}") };
    assert_eq!(bound.kind(), &TermKind::Var(m.clone()));

    assert!(alpha_eq(&bernoulli(), &term("fun p : real -> let x = sample in x <= p")));

    let (l, a, b) = (Term::var("l"), Term::num(1.0), Term::num(2.0));
    let expanded = if_real(l.clone(), u.clone(), a.clone(), b.clone());
    assert!(alpha_eq(&expanded, &Term::ifz(Term::chi(u, l), b, a)));
}

// ---- parsing and printing

#[test]
fn parse_examples() {
    let t = term("let x = sample in x + x");
    let expected = Term::let_in("x", Term::sample(), Term::prim("+", vec![Term::var("x"), Term::var("x")]));
    assert!(alpha_eq(&t, &expected));

    let t = term("(fun x : real -> x = x) sample");
    assert!(matches!(t.kind(), TermKind::App(f, a) if matches!(f.kind(), TermKind::Abs(..)) && a.kind() == &TermKind::Sample));

    let err = parse("((").unwrap_err();
    assert_eq!((err.line, err.col), (1, 3));
}

#[test]
fn pretty_examples() {
    assert_eq!(pretty(&Term::sample()), "sample");
    assert_eq!(pretty(&Term::num(5.0)), "5");
    let nested = Term::apps(Term::var("f"), vec![Term::app(Term::var("g"), Term::var("x")), Term::var("y")]);
    let text = pretty(&nested);
    assert_eq!(text, "f (g x) y");
    assert!(alpha_eq(&parse_term(&text).unwrap(), &nested));
}

// ---- reduction

#[test]
fn decomposition_examples() {
    assert_eq!(decompose(&Term::num(3.0)), Decomposition::NormalForm);

    let t = term("(fun x : real -> x) 1 2");
    let Decomposition::Split(ctx, redex) = decompose(&t) else { panic!() };
    assert_eq!(redex.kind, RedexKind::Beta);
    assert!(alpha_eq(&redex.term, &term("(fun x : real -> x) 1")));
    assert!(alpha_eq(&ctx.plug(Term::var("hole")), &term("hole 2")));

    let t = term("let x = sample in x + 1");
    let Decomposition::Split(ctx, redex) = decompose(&t) else { panic!() };
    assert_eq!(redex.kind, RedexKind::Sample);
    assert!(alpha_eq(&ctx.plug(Term::var("hole")), &term("let x = hole in x + 1")));
}

#[test]
fn step_examples() {
    let prims = PrimitiveTable::standard();
    let mut rng = RngStream::new(1, 0);
    assert!(alpha_eq(&step(&term("ifz 0 then 1 else 2"), &mut rng, prims).unwrap(), &term("1")));

    let fix = term("fix (fun x : real -> x)");
    let TermKind::Fix(m) = fix.kind() else { panic!() };
    assert!(alpha_eq(&step(&fix, &mut rng, prims).unwrap(), &Term::app(m.clone(), fix.clone())));

    let mut a = RngStream::new(9, 4);
    let expected = a.clone().uniform();
    let out = step(&Term::sample(), &mut a, prims).unwrap();
    assert_eq!(out.as_numeral(), Some(expected));
}

#[test]
fn run_examples() {
    let prims = PrimitiveTable::standard();
    assert_eq!(run(&term("3 + 2"), 10, RngStream::new(0, 0), prims), Outcome::Value(5.0));
    assert_eq!(run(&term("fix (fun x : real -> x)"), 500, RngStream::new(0, 0), prims), Outcome::Exhausted(500));
    for seed in 0..50 {
        assert_eq!(run(&term("let x = sample in x = x"), 10, RngStream::new(seed, 0), prims), Outcome::Value(1.0));
    }
}

#[test]
fn estimate_examples() {
    let e = estimate_mass(&term("#bernoulli 0.3"), &IntervalSet::point(1.0), 10_000, 100, 5, 0.01);
    assert!((e.p_hat - 0.3).abs() <= e.dkw, "{e:?}");
    assert!((dkw_bound(100_000, 0.01) - 0.005146).abs() < 1e-6);

    let e = estimate_mass(&term("(fun x : real -> x = x) sample"), &IntervalSet::point(0.0), 1000, 100, 5, 0.01);
    assert_eq!(e.p_hat, 1.0);

    let runs = ppcf::operational::sample_runs(&term("#observe[{}] sample"), 200, 2_000, 5, PrimitiveTable::standard());
    assert_eq!(runs.exhausted(), 200);
    assert_eq!(runs.estimate(&IntervalSet::real(), 0.01).p_hat, 0.0);
}

// ---- measures

#[test]
fn mass_examples() {
    assert_eq!(mass(&Measure::dirac(5.0), &set("[4,6]")), 1.0);
    assert!((mass(&Measure::uniform01(), &set("[0,0.25]")) - 0.25).abs() < 1e-12);
    let bern = Measure::mix(&[0.3, 0.7], &[Measure::dirac(1.0), Measure::dirac(0.0)]);
    assert!((mass(&bern, &IntervalSet::point(1.0)) - 0.3).abs() < 1e-15);
}

#[test]
fn integrate_examples() {
    let mean = Measure::uniform01().integrate(&|r| r, &quad()).unwrap();
    assert!((mean - 0.5).abs() < 1e-9);
    assert_eq!(Measure::dirac(2.0).integrate(&|r| r * r + 1.0, &quad()).unwrap(), 5.0);
    let exp = Measure::density(set("[0,40]"), |s| (-s).exp(), 1.0);
    let total = exp.integrate(&|_| 1.0, &quad()).unwrap();
    // Antiderivative of e^{-s}: 1 - e^{-40}.
    assert!((total - (1.0 - (-40f64).exp())).abs() < 1e-8, "{total}");
}

#[test]
fn mix_examples() {
    let m = Measure::mix(&[1.0, 1.0], &[Measure::dirac(0.0), Measure::dirac(0.0)]);
    assert_eq!(m.atoms_only().unwrap(), &[(0.0, 2.0)]);
    let half = Measure::mix(&[0.5], &[Measure::uniform01()]);
    assert!((mass(&half, &IntervalSet::real()) - 0.5).abs() < 1e-12);
    assert!((mass(&half, &set("[0,0.5]")) - 0.25).abs() < 1e-12);
}

#[test]
fn pushforward_examples() {
    let std = PrimitiveTable::standard();
    let sum = Measure::pushforward(std.get("+").unwrap(), vec![Measure::dirac(3.0), Measure::dirac(2.0)]).unwrap();
    assert_eq!(sum.as_dirac(), Some(5.0));

    let diag = Measure::pushforward(std.get("=").unwrap(), vec![Measure::uniform01(), Measure::uniform01()]).unwrap();
    assert!((mass(&diag, &IntervalSet::point(0.0)) - 1.0).abs() < 1e-9);

    let log = Measure::pushforward(std.get("log").unwrap(), vec![Measure::uniform01()]).unwrap();
    let neglog = Measure::pushforward(std.get("neg").unwrap(), vec![log]).unwrap();
    let v = mass(&neglog, &set("[0,1]"));
    assert!((v - (1.0 - (-1f64).exp())).abs() < 1e-9, "{v}");
}

// ---- denotations

#[test]
fn dirac_arithmetic() {
    let m = denote("3 + 2");
    assert_eq!(mass(&m, &IntervalSet::point(5.0)), 1.0);
    assert_eq!(mass(&m, &IntervalSet::point(5.0).complement()), 0.0);
}

#[test]
fn let_versus_call_by_name() {
    assert_eq!(denote("let x = sample in x = x").as_dirac(), None);
    assert_eq!(mass(&denote("let x = sample in x = x"), &IntervalSet::point(1.0)), 1.0);
    assert!((mass(&denote("(fun x : real -> x = x) sample"), &IntervalSet::point(0.0)) - 1.0).abs() < 1e-9);
}

#[test]
fn bernoulli_masses() {
    let m = denote("#bernoulli 0.3");
    assert!((mass(&m, &IntervalSet::point(0.0)) - 0.7).abs() < 1e-12);
    assert!((mass(&m, &IntervalSet::point(1.0)) - 0.3).abs() < 1e-12);
}

#[test]
fn exponential_cdf() {
    let m = denote("#exponential");
    for x in [0.1, 0.5, 1.0, 2.0, 5.0] {
        let v = mass(&m, &IntervalSet::at_most(x));
        assert!((v - (1.0 - (-x).exp())).abs() < 1e-9, "{x}: {v}");
    }
}

#[test]
fn normal_and_gaussian_cdfs() {
    let phi = Normal::standard();
    let m = denote("#normal");
    assert!((mass(&m, &IntervalSet::at_most(0.0)) - 0.5).abs() < 1e-9);
    for x in [-1.5, 0.7] {
        assert!((mass(&m, &IntervalSet::at_most(x)) - phi.cdf(x)).abs() < 1e-7);
    }
    let g = denote("#gaussian 1 2");
    let oracle = Normal::new(1.0, 2.0).unwrap();
    for (a, b) in [(-1.0, 0.5), (1.0, 4.0)] {
        let v = mass(&g, &IntervalSet::closed(a, b));
        assert!((v - (oracle.cdf(b) - oracle.cdf(a))).abs() < 1e-7, "[{a},{b}]: {v}");
    }
}

#[test]
fn conditioning() {
    let m = denote("#observe[[0,0.5]] sample");
    for (v, expected) in [("[0,0.25]", 0.5), ("[0.1,0.2]", 0.2), ("[0.4,0.9]", 0.2), ("(0.5,1]", 0.0)] {
        assert!((mass(&m, &set(v)) - expected).abs() < 1e-6, "{v}");
    }
    assert_eq!(mass(&denote("#observe[[2,3]] sample"), &IntervalSet::real()), 0.0);
}

#[test]
fn let_bind_examples() {
    let interp = Interpreter::default();
    let body = term("x + x");
    let six = let_bind(&Measure::dirac(3.0), move |r| {
        let env = Env::new().extend("x", SemValue::Meas(Measure::dirac(r)));
        Ok(interp.interpret(&body, &env).unwrap().measure().unwrap().clone())
    })
    .unwrap();
    assert_eq!(six.as_dirac(), Some(6.0));

    let seven = let_bind(&Measure::uniform01(), |_| Ok(Measure::dirac(7.0))).unwrap();
    assert!((mass(&seven, &IntervalSet::point(7.0)) - 1.0).abs() < 1e-12);
}

#[test]
fn fixpoint_examples() {
    assert!(denote("fix (fun x : real -> x)").is_zero());

    let f = Interpreter::default()
        .interpret(&term("fun y : real -> let x = sample in ifz chi[[0,0.5]](x) then y else x"), &Env::new())
        .unwrap();
    let its = kleene_iterates(&f, &Type::Real, 8).unwrap();
    for (k, it) in its.iter().enumerate() {
        let oracle: f64 = (0..k).map(|j| 0.5 * 0.5f64.powi(j as i32)).sum();
        assert!((mass(it.measure().unwrap(), &set("[0,0.5]")) - oracle).abs() < 1e-9, "iterate {k}");
    }
    assert!(zero_of(&Type::Real).measure().unwrap().is_zero());
}

/// `P(u₁ + u₂ + u₃ ≤ 1)` by convolving three discrete uniforms on the
/// midpoints of `n` cells; the discretization error is below `1/(6n²)`.
fn irwin_hall_three_at_one(n: usize) -> f64 {
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
    let three = conv(&conv(&one, &one), &one);
    // Cell indices i+j+k sit at (i+j+k+1.5)/n.
    three
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as f64 + 1.5) / n as f64 <= 1.0)
        .map(|(_, p)| p)
        .sum()
}

#[test]
fn monte_carlo_expectation() {
    let m = denote("#expectation_3 (fun x : real -> x) sample");
    assert!((mass(&m, &set("[0,0.5]")) - 0.5).abs() < 1e-6);
    let oracle = irwin_hall_three_at_one(600);
    assert!((mass(&m, &IntervalSet::closed(0.0, 1.0 / 3.0)) - oracle).abs() < 1e-4);
}

// ---- stability

#[test]
fn signed_difference_examples() {
    let wpor = PointFn::wpor();
    let us = vec![vec![0.5, 0.5]];
    assert_eq!(delta_signed(&wpor, &[0.0, 0.0], &us, Sign::Plus).unwrap(), 0.75);
    assert_eq!(delta_signed(&wpor, &[0.0, 0.0], &us, Sign::Minus).unwrap(), 0.0);

    let id = PointFn::identity();
    let us = vec![vec![0.3], vec![0.4]];
    let plus = delta_signed(&id, &[0.0], &us, Sign::Plus).unwrap();
    let minus = delta_signed(&id, &[0.0], &us, Sign::Minus).unwrap();
    assert!((plus - minus).abs() < 1e-15);
}

#[test]
fn iterated_difference_examples() {
    let cube = PointFn::polynomial(&[0.0, 0.0, 0.0, 1.0]);
    let d = iterated_delta(&cube, &[0.2], &[vec![0.5]]).unwrap();
    assert!((d - (0.7f64.powi(3) - 0.2f64.powi(3))).abs() < 1e-15);

    let sq = PointFn::polynomial(&[0.0, 0.0, 1.0]);
    assert!((iterated_delta(&sq, &[0.1], &[vec![0.2], vec![0.3]]).unwrap() - 0.12).abs() < 1e-12);
}

#[test]
fn grid_check_examples() {
    let r = check_pre_stable(&PointFn::wpor(), 1, DEFAULT_GRID, DEFAULT_SLACK);
    assert!(!r.passed());
    assert!(r.violations.iter().all(|v| v.delta_minus > v.delta_plus + r.slack));
    let w = r
        .violations
        .iter()
        .find(|v| v.x == [0.0, 0.0] && v.increments == [vec![0.5, 0.5], vec![0.5, 0.5]])
        .unwrap();
    assert_eq!((w.delta_minus, w.delta_plus), (1.5, 1.0));
    for n in 0..=4 {
        assert!(check_pre_stable(&PointFn::identity(), n, DEFAULT_GRID, DEFAULT_SLACK).passed());
        assert!(check_pre_stable(&PointFn::polynomial(&[0.0, 0.0, 0.5, 0.3]), n, DEFAULT_GRID, DEFAULT_SLACK).passed());
    }
}

// ---- harness

fn config(intervals: Vec<IntervalSet>, runs: u64) -> AdequacyConfig {
    AdequacyConfig {
        runs,
        ..AdequacyConfig::with_intervals(intervals)
    }
}

#[test]
fn bernoulli_adequacy() {
    let p = parse("#bernoulli 0.3").unwrap();
    let r = adequacy_check(&p, &config(vec![IntervalSet::point(0.0), IntervalSet::point(1.0)], 100_000)).unwrap();
    assert!(r.pass, "{}", r.to_json());
    assert!((r.queries[0].denotational_mass.unwrap() - 0.7).abs() < 1e-12);
    assert!((r.queries[1].denotational_mass.unwrap() - 0.3).abs() < 1e-12);
}

#[test]
fn exponential_grid_adequacy() {
    let p = parse("#exponential").unwrap();
    let cells = grid_cells(0.0, 5.0, 10);
    let r = adequacy_check(&p, &config(cells.clone(), 50_000)).unwrap();
    assert!(r.pass, "{}", r.to_json());
    for (q, u) in r.queries.iter().zip(&cells) {
        let iv = u.intervals()[0];
        let oracle = (-iv.lo).exp() - (-iv.hi).exp();
        assert!((q.denotational_mass.unwrap() - oracle).abs() < 1e-9);
    }
    assert_eq!(cdf_sets(0.0, 5.0, 10).len(), 11);
}

#[test]
fn negative_control() {
    let p = parse("3 + 2").unwrap();
    let std = PrimitiveTable::standard();
    let broken = std.with_override("+", std.get("-").unwrap());
    let r = adequacy_check_with(&p, &config(vec![IntervalSet::point(5.0)], 1000), &broken, std).unwrap();
    assert!(!r.pass);
    let ok = adequacy_check_with(&p, &config(vec![IntervalSet::point(5.0)], 1000), std, std).unwrap();
    assert!(ok.pass);
}

#[test]
fn divergence_is_not_counted() {
    let p = parse("#observe[[0,0.01]] sample").unwrap();
    let cfg = AdequacyConfig {
        budget: 200,
        ..config(vec![IntervalSet::closed(0.0, 0.005), IntervalSet::real()], 2_000)
    };
    let r = adequacy_check(&p, &cfg).unwrap();
    assert!(r.exhausted_fraction > 0.5);
    for q in &r.queries {
        assert!(q.empirical_mass <= q.denotational_mass.unwrap() + q.dkw_bound + q.quad_tol);
    }
}
