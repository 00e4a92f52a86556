use std::io::{Read, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ppcf::harness::{cdf_sets, DEFAULT_SEED};
use ppcf::operational::sample_runs;
use ppcf::stability::{check_pre_stable_with, GridOptions, DEFAULT_GRID, DEFAULT_SLACK};
use ppcf::{
    adequacy_check, typecheck, AdequacyConfig, AdequacyReport, FixConfig, IntervalSet, Interpreter,
    PointFn, PrimitiveTable, QuadratureConfig, SourceProgram, Type,
};

/// Sampling and measure semantics for a probabilistic call-by-name PCF.
///
/// FILE arguments name a source file, `-` for standard input, or are taken
/// as program text when no such file exists.
/// `println!` that ignores a closed pipe, as when output goes to `head`.
macro_rules! emit {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "ppcf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a program and print it back in normal form.
    Parse { file: String },
    /// Print the type of the program's main term.
    Typecheck { file: String },
    /// Run the sampling interpreter.
    Run {
        file: String,
        #[arg(long, default_value_t = 1)]
        runs: u64,
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        sets: SetArgs,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
    },
    /// Print masses of the program's denotation.
    Denote {
        file: String,
        #[command(flatten)]
        sets: SetArgs,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Compare both semantics on the given sets.
    Check {
        file: String,
        #[command(flatten)]
        sets: SetArgs,
        #[command(flatten)]
        tol: TolArgs,
        #[arg(long, default_value_t = 100_000)]
        runs: u64,
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        /// Divide delta by the number of sets so all bands hold jointly.
        #[arg(long)]
        bonferroni: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Check Δ⁻ ≤ Δ⁺ on a grid over the unit cube.
    Stability {
        #[arg(value_enum, required_unless_present = "function")]
        target: Option<Target>,
        /// Function of x (one variable) or x1, x2, … as program text.
        #[arg(long = "fn", conflicts_with = "target")]
        function: Option<String>,
        /// Coefficients c0,c1,… of the polynomial target.
        #[arg(long, value_delimiter = ',', default_value = "0,0,0.5,0.3")]
        coeffs: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long, default_value_t = DEFAULT_SLACK)]
        slack: f64,
        /// Violations to print.
        #[arg(long, default_value_t = 10)]
        show: usize,
    },
}

#[derive(Args)]
struct SetArgs {
    /// A set such as "[a,b) + {c} + (d,inf)". Repeatable; `;` also separates sets.
    #[arg(long = "intervals")]
    intervals: Vec<String>,
    /// CDF sets (-inf, x] at steps+1 points from lo to hi.
    #[arg(long, value_name = "LO:HI:STEPS")]
    cdf: Option<String>,
}

#[derive(Args)]
struct TolArgs {
    #[arg(long, default_value_t = 1e-9)]
    abs_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    mass_tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
}

impl TolArgs {
    fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig {
            abs_tol: self.abs_tol,
            ..QuadratureConfig::default()
        }
    }

    fn fix(&self) -> FixConfig {
        FixConfig {
            mass_tol: self.mass_tol,
            max_iters: self.max_iters,
            ..FixConfig::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Wpor,
    Poly,
    Identity,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode, String> {
    match cmd {
        Command::Parse { file } => {
            let p = load(&file)?;
            for (name, def) in &p.definitions {
                emit!("def {name} = {def};");
            }
            emit!("{}", p.main);
        }
        Command::Typecheck { file } => emit!("{}", main_type(&load(&file)?)?),
        Command::Run { file, runs, budget, seed, sets, delta } => {
            let p = load(&file)?;
            let sets = sets.resolve()?;
            let summary = sample_runs(&p.closed_main(), runs, budget, env_seed(seed)?, PrimitiveTable::standard());
            let values: Vec<f64> = summary.values().collect();
            let mean = (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64);
            let mut out = json!({
                "runs": runs,
                "exhausted": summary.exhausted(),
                "stuck": summary.stuck(),
                "mean": mean,
                "total_steps": summary.total_steps(),
            });
            if runs <= 20 {
                out["values"] = json!(summary.records.iter().map(|r| r.value).collect::<Vec<_>>());
            }
            if delta <= 0.0 || delta >= 1.0 {
                return Err("delta must lie strictly between 0 and 1".into());
            }
            if !sets.is_empty() {
                out["estimates"] = Value::Array(
                    sets.iter()
                        .map(|u| {
                            let e = summary.estimate(u, delta);
                            json!({ "U": u.to_string(), "p_hat": e.p_hat, "dkw": e.dkw, "hits": e.hits })
                        })
                        .collect(),
                );
            }
            emit!("{}", pretty_json(&out));
        }
        Command::Denote { file, sets, tol } => {
            let p = load(&file)?;
            let sets = sets.resolve()?;
            let mut fix = tol.fix();
            fix.probe_sets = sets.clone();
            let quad = tol.quadrature();
            let interp = Interpreter::default().with_quadrature(quad).with_fix(fix);
            let m = interp.denote(&p.closed_main()).map_err(|e| e.to_string())?;
            let total = m.total_mass(&quad).map_err(|e| e.to_string())?;
            let mut out = json!({ "total_mass": total });
            if let Some(atoms) = m.atoms_only() {
                out["atoms"] = json!(atoms);
            }
            let mut masses = Vec::new();
            for u in &sets {
                let v = m.mass(u, &quad).map_err(|e| e.to_string())?;
                masses.push(json!({ "U": u.to_string(), "mass": v }));
            }
            if !masses.is_empty() {
                out["masses"] = Value::Array(masses);
            }
            emit!("{}", pretty_json(&out));
        }
        Command::Check { file, sets, tol, runs, budget, seed, delta, bonferroni, format } => {
            let p = load(&file)?;
            let cfg = AdequacyConfig {
                intervals: sets.resolve()?,
                runs,
                budget,
                delta,
                bonferroni,
                quadrature: tol.quadrature(),
                fix: tol.fix(),
                seed: env_seed(seed)?,
            };
            let report = adequacy_check(&p, &cfg).map_err(|e| e.to_string())?;
            match format {
                Format::Json => emit!("{}", report.to_json()),
                Format::Csv => emit!("{}", to_csv(&report)?.trim_end()),
            }
            return Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
        Command::Stability { target, function, coeffs, n, grid, slack, show } => {
            if grid < 2 {
                return Err("the grid needs at least 2 steps".into());
            }
            let f = match (target, function) {
                (_, Some(src)) => point_fn(&src)?,
                (Some(Target::Wpor), None) => PointFn::wpor(),
                (Some(Target::Poly), None) => PointFn::polynomial(&coeffs),
                (Some(Target::Identity), None) => PointFn::identity(),
                (None, None) => unreachable!("clap requires a target"),
            };
            let report = check_pre_stable_with(&f, n, grid, slack, GridOptions::default());
            let out = json!({
                "function": report.function,
                "k": f.k,
                "n": report.n,
                "grid": report.grid,
                "slack": report.slack,
                "exhaustive": report.exhaustive,
                "cases": report.cases,
                "violation_count": report.violations.len(),
                "violations": report.violations.iter().take(show).collect::<Vec<_>>(),
                "verdict": report.verdict,
            });
            emit!("{}", pretty_json(&out));
            return Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
    }
    Ok(ExitCode::SUCCESS)
}

impl SetArgs {
    fn resolve(&self) -> Result<Vec<IntervalSet>, String> {
        let mut sets = Vec::new();
        for spec in &self.intervals {
            for part in spec.split(';').filter(|s| !s.trim().is_empty()) {
                sets.push(part.parse::<IntervalSet>().map_err(|e| format!("in set {part:?}: {e}"))?);
            }
        }
        if let Some(cdf) = &self.cdf {
            let fields: Vec<&str> = cdf.split(':').collect();
            let bad = || format!("expected LO:HI:STEPS, found {cdf:?}");
            let [lo, hi, steps] = fields[..] else {
                return Err(bad());
            };
            let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
            let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
            let steps: usize = steps.trim().parse().map_err(|_| bad())?;
            if !(lo < hi) || steps == 0 {
                return Err(bad());
            }
            sets.extend(cdf_sets(lo, hi, steps));
        }
        Ok(sets)
    }
}

/// `PPCF_SEED` takes precedence over the command line.
fn env_seed(flag: u64) -> Result<u64, String> {
    match std::env::var("PPCF_SEED") {
        Ok(s) => s.trim().parse().map_err(|_| format!("PPCF_SEED is not a seed: {s:?}")),
        Err(_) => Ok(flag),
    }
}

fn load(file: &str) -> Result<SourceProgram, String> {
    let text = if file == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| e.to_string())?;
        s
    } else if Path::new(file).is_file() {
        std::fs::read_to_string(file).map_err(|e| format!("{file}: {e}"))?
    } else {
        file.to_string()
    };
    ppcf::parse(&text).map_err(|e| e.to_string())
}

fn main_type(p: &SourceProgram) -> Result<Type, String> {
    typecheck(&ppcf::TypingContext::new(), &p.closed_main()).map_err(|e| e.to_string())
}

fn point_fn(src: &str) -> Result<PointFn, String> {
    let term = ppcf::parse_term(src).map_err(|e| e.to_string())?;
    let mut vars: Vec<_> = ppcf::free_vars(&term).into_iter().collect();
    vars.sort_by_key(|v| {
        let s: &str = v.as_ref();
        let idx: usize = s.trim_start_matches('x').parse().unwrap_or(0);
        (idx, s.to_string())
    });
    if vars.is_empty() || vars.iter().any(|v| !is_coordinate(v.as_ref())) {
        return Err("the function's free variables must be x, or x1, x2, …".into());
    }
    let ctx = vars.iter().map(|v| (v.clone(), Type::Real)).collect();
    let ty = ppcf::syntax::typecheck_with(PrimitiveTable::standard(), &ctx, &term).map_err(|e| e.to_string())?;
    if !ty.is_real() {
        return Err(format!("the function has type {ty}, not real"));
    }
    PointFn::from_term(&term, &vars, PrimitiveTable::standard(), 1_000_000)
}

fn is_coordinate(v: &str) -> bool {
    v == "x" || v.strip_prefix('x').is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

fn pretty_json(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("values serialize")
}

fn to_csv(report: &AdequacyReport) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| e.to_string();
    w.write_record(["U", "denotational_mass", "empirical_mass", "dkw_bound", "quad_tol", "pass", "error"])
        .map_err(err)?;
    for q in &report.queries {
        w.write_record([
            q.set.to_string(),
            q.denotational_mass.map(|d| d.to_string()).unwrap_or_default(),
            q.empirical_mass.to_string(),
            q.dkw_bound.to_string(),
            q.quad_tol.to_string(),
            q.pass.to_string(),
            q.error.as_ref().map(|e| e.to_string()).unwrap_or_default(),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}
