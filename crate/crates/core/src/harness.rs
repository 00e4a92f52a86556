//! Runs both semantics of a program and compares the mass each assigns to
//! a list of sets.
//!
//! A query passes when `|denotational − empirical| ≤ dkw_bound + quad_tol`.
//! Runs that hit the step budget are counted separately and never land in
//! any set, so divergence shows up as missing empirical mass.

use rayon::prelude::*;
use serde::Serialize;

use crate::denotational::{DenotationError, FixConfig, Interpreter};
use crate::interval::IntervalSet;
use crate::measure::quadrature::integrate;
use crate::measure::{MeasureError, QuadratureConfig};
use crate::operational::{contract, decompose, dkw_bound, sample_runs, Decomposition, RedexKind, RngStream};
use crate::parser::SourceProgram;
use crate::syntax::{typecheck_with, PrimitiveTable, Term, TypingContext};

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Clone, Debug, PartialEq)]
pub struct AdequacyConfig {
    pub intervals: Vec<IntervalSet>,
    pub runs: u64,
    pub budget: u64,
    /// Failure probability of each DKW band.
    pub delta: f64,
    /// Split `delta` across the queries so that the bands hold jointly.
    pub bonferroni: bool,
    pub quadrature: QuadratureConfig,
    pub fix: FixConfig,
    pub seed: u64,
}

impl Default for AdequacyConfig {
    fn default() -> AdequacyConfig {
        AdequacyConfig {
            intervals: Vec::new(),
            runs: 100_000,
            budget: 10_000,
            delta: 0.01,
            bonferroni: false,
            quadrature: QuadratureConfig::default(),
            fix: FixConfig::default(),
            seed: DEFAULT_SEED,
        }
    }
}

impl AdequacyConfig {
    pub fn with_intervals(intervals: Vec<IntervalSet>) -> AdequacyConfig {
        AdequacyConfig {
            intervals,
            ..AdequacyConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.into()));
        if self.runs < 100 {
            return bad("at least 100 runs are required");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie strictly between 0 and 1");
        }
        if self.intervals.is_empty() {
            return bad("no query sets given");
        }
        self.quadrature.validate().map_err(HarnessError::Config)
    }

    /// The per-query failure probability actually used.
    pub fn effective_delta(&self) -> f64 {
        if self.bonferroni {
            self.delta / self.intervals.len().max(1) as f64
        } else {
            self.delta
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Denotation(#[from] DenotationError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryResult {
    #[serde(rename = "U")]
    pub set: IntervalSet,
    /// Absent when the denotational side failed; see `error`.
    pub denotational_mass: Option<f64>,
    pub empirical_mass: f64,
    pub dkw_bound: f64,
    pub quad_tol: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<MeasureError>,
}

/// Step counts of the sampling runs. Wall-clock time is left out so that
/// reports are reproducible byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunStats {
    pub runs: u64,
    pub budget: u64,
    pub seed: u64,
    pub delta: f64,
    pub total_steps: u64,
    pub max_steps: u64,
    pub mean_steps: f64,
    pub exhausted_runs: u64,
    pub stuck_runs: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdequacyReport {
    pub queries: Vec<QueryResult>,
    pub pass: bool,
    pub stats: RunStats,
    pub exhausted_fraction: f64,
}

impl AdequacyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Compares both semantics of the program's closed main term.
pub fn adequacy_check(program: &SourceProgram, cfg: &AdequacyConfig) -> Result<AdequacyReport, HarnessError> {
    let prims = PrimitiveTable::standard();
    adequacy_check_with(program, cfg, prims, prims)
}

/// As [`adequacy_check`], with separate primitive tables for the sampling
/// and the denotational side. Giving them different tables is a fault
/// injection that the check should detect.
pub fn adequacy_check_with(
    program: &SourceProgram,
    cfg: &AdequacyConfig,
    operational: &PrimitiveTable,
    denotational: &PrimitiveTable,
) -> Result<AdequacyReport, HarnessError> {
    adequacy_check_term(&program.closed_main(), cfg, operational, denotational)
}

pub fn adequacy_check_term(
    term: &Term,
    cfg: &AdequacyConfig,
    operational: &PrimitiveTable,
    denotational: &PrimitiveTable,
) -> Result<AdequacyReport, HarnessError> {
    cfg.validate()?;
    let ty = typecheck_with(denotational, &TypingContext::new(), term).map_err(DenotationError::from)?;
    if !ty.is_real() {
        return Err(HarnessError::Config(format!("the program has type {ty}, not real")));
    }
    let mut fix = cfg.fix.clone();
    fix.probe_sets.extend(cfg.intervals.iter().cloned());
    let interp = Interpreter::new(denotational.clone())
        .with_quadrature(cfg.quadrature)
        .with_fix(fix.clone());
    let measure = interp.denote(term);

    let summary = sample_runs(term, cfg.runs, cfg.budget, cfg.seed, operational);
    let delta = cfg.effective_delta();
    let dkw = dkw_bound(cfg.runs, delta);
    let quad_tol = 2.0 * (cfg.quadrature.abs_tol + if term.contains_fix() { fix.mass_tol } else { 0.0 });

    let queries: Vec<QueryResult> = cfg
        .intervals
        .iter()
        .map(|u| {
            let empirical_mass = summary.estimate(u, delta).p_hat;
            let den = match &measure {
                Ok(m) => m.mass(u, &cfg.quadrature),
                Err(DenotationError::Measure(e)) => Err(e.clone()),
                Err(DenotationError::Type(e)) => Err(MeasureError::Unsupported(e.to_string())),
            };
            let (denotational_mass, error) = match den {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e)),
            };
            let pass = denotational_mass.is_some_and(|d| (d - empirical_mass).abs() <= dkw + quad_tol);
            QueryResult {
                set: u.clone(),
                denotational_mass,
                empirical_mass,
                dkw_bound: dkw,
                quad_tol,
                pass,
                error,
            }
        })
        .collect();

    let runs = summary.runs();
    Ok(AdequacyReport {
        pass: queries.iter().all(|q| q.pass),
        queries,
        stats: RunStats {
            runs,
            budget: cfg.budget,
            seed: cfg.seed,
            delta,
            total_steps: summary.total_steps(),
            max_steps: summary.max_steps(),
            mean_steps: summary.total_steps() as f64 / runs as f64,
            exhausted_runs: summary.exhausted(),
            stuck_runs: summary.stuck(),
        },
        exhausted_fraction: summary.exhausted_fraction(),
    })
}

/// Largest probe-mass change across one reduction step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepCheck {
    pub redex: String,
    pub max_change: f64,
}

/// Denotations along the reduction path of a term.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SoundnessTrace {
    /// One entry per deterministic step taken.
    pub steps: Vec<StepCheck>,
    /// At the first `sample` redex `E[sample]`: the largest gap between
    /// `⟦E[sample]⟧(U)` and `∫₀¹ ⟦E[r]⟧(U) dr` over the probe sets.
    pub sample_gap: Option<f64>,
}

/// Follows up to `max_steps` deterministic reduction steps of `term`,
/// comparing the masses each intermediate term assigns to `probes`.
pub fn soundness_trace(
    interp: &Interpreter,
    term: &Term,
    probes: &[IntervalSet],
    max_steps: usize,
) -> Result<SoundnessTrace, DenotationError> {
    let masses = |t: &Term| -> Result<Vec<f64>, DenotationError> {
        let m = interp.denote(t)?;
        Ok(probes.iter().map(|u| m.mass(u, &interp.quad)).collect::<Result<_, _>>()?)
    };
    let mut cur = term.clone();
    let mut before = masses(&cur)?;
    let mut steps = Vec::new();
    for _ in 0..max_steps {
        let Decomposition::Split(ctx, redex) = decompose(&cur) else {
            break;
        };
        if redex.kind == RedexKind::Sample {
            // Every integrand value is a fresh denotation, so the outer
            // integral runs at a coarser tolerance than the inner ones.
            let outer = QuadratureConfig {
                abs_tol: 1e-7,
                max_depth: 26,
                initial_panels: 4,
                ..interp.quad
            };
            let gaps: Vec<f64> = probes
                .par_iter()
                .zip(&before)
                .map(|(u, b)| {
                    let integral = integrate(
                        &mut |r| {
                            interp
                                .denote(&ctx.plug(Term::num(r)))
                                .map_err(|e| MeasureError::Unsupported(e.to_string()))?
                                .mass(u, &interp.quad)
                        },
                        0.0,
                        1.0,
                        &outer,
                    )?;
                    Ok((integral - b).abs())
                })
                .collect::<Result<_, MeasureError>>()?;
            let gap = gaps.into_iter().fold(0.0, f64::max);
            return Ok(SoundnessTrace { steps, sample_gap: Some(gap) });
        }
        let next = ctx.plug(
            contract(&redex, &mut RngStream::new(0, 0), interp.prims())
                .map_err(|e| MeasureError::Unsupported(e.to_string()))?,
        );
        let after = masses(&next)?;
        let max_change = before.iter().zip(&after).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        steps.push(StepCheck {
            redex: format!("{:?}", redex.kind),
            max_change,
        });
        cur = next;
        before = after;
    }
    Ok(SoundnessTrace { steps, sample_gap: None })
}

fn grid_points(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    assert!(lo < hi && steps >= 1, "need lo < hi and at least one step");
    (0..=steps)
        .map(|i| if i == steps { hi } else { lo + (hi - lo) * i as f64 / steps as f64 })
        .collect()
}

/// `(−∞, xᵢ]` for `steps + 1` equally spaced `xᵢ` from `lo` to `hi`.
pub fn cdf_sets(lo: f64, hi: f64, steps: usize) -> Vec<IntervalSet> {
    grid_points(lo, hi, steps).into_iter().map(IntervalSet::at_most).collect()
}

/// The cells `[xᵢ, xᵢ₊₁)` of an equally spaced grid from `lo` to `hi`.
pub fn grid_cells(lo: f64, hi: f64, steps: usize) -> Vec<IntervalSet> {
    grid_points(lo, hi, steps)
        .windows(2)
        .map(|w| IntervalSet::interval(w[0], w[1], true, false))
        .collect()
}
