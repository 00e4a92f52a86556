use rayon::prelude::*;
use serde::Serialize;

use super::{run_counted, Outcome, RngStream};
use crate::interval::IntervalSet;
use crate::syntax::{PrimitiveTable, Term};

/// Half-width of the Dvoretzky-Kiefer-Wolfowitz band: with probability at
/// least `1 - delta`, every empirical mass of `runs` samples lies within
/// this distance of the true one.
pub fn dkw_bound(runs: u64, delta: f64) -> f64 {
    assert!(runs >= 1 && delta > 0.0 && delta < 1.0);
    ((2.0 / delta).ln() / (2.0 * runs as f64)).sqrt()
}

/// A Monte-Carlo mass estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub p_hat: f64,
    pub dkw: f64,
    pub hits: u64,
    pub runs: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunRecord {
    /// The numeral reached, if any.
    pub value: Option<f64>,
    pub exhausted: bool,
    pub steps: u64,
}

/// The outcomes of independent runs of one program, in run order.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub records: Vec<RunRecord>,
}

impl RunSummary {
    pub fn runs(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn hits(&self, u: &IntervalSet) -> u64 {
        self.records
            .iter()
            .filter(|r| r.value.is_some_and(|v| u.contains(v)))
            .count() as u64
    }

    /// Fraction of runs ending at a numeral in `u`. Exhausted and stuck
    /// runs are in no set.
    pub fn estimate(&self, u: &IntervalSet, delta: f64) -> Estimate {
        let hits = self.hits(u);
        Estimate {
            p_hat: hits as f64 / self.runs() as f64,
            dkw: dkw_bound(self.runs(), delta),
            hits,
            runs: self.runs(),
        }
    }

    pub fn exhausted(&self) -> u64 {
        self.records.iter().filter(|r| r.exhausted).count() as u64
    }

    /// Runs that stopped at a normal form other than a numeral.
    pub fn stuck(&self) -> u64 {
        self.records
            .iter()
            .filter(|r| r.value.is_none() && !r.exhausted)
            .count() as u64
    }

    pub fn exhausted_fraction(&self) -> f64 {
        self.exhausted() as f64 / self.runs() as f64
    }

    pub fn total_steps(&self) -> u64 {
        self.records.iter().map(|r| r.steps).sum()
    }

    pub fn max_steps(&self) -> u64 {
        self.records.iter().map(|r| r.steps).max().unwrap_or(0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().filter_map(|r| r.value)
    }
}

/// Runs `t` `runs` times; run `i` draws from `RngStream::for_run(seed, i)`.
/// Runs execute in parallel but the result does not depend on scheduling.
pub fn sample_runs(
    t: &Term,
    runs: u64,
    budget: u64,
    seed: u64,
    prims: &PrimitiveTable,
) -> RunSummary {
    let records = (0..runs)
        .into_par_iter()
        .map(|i| {
            let (outcome, steps) = run_counted(t, budget, RngStream::for_run(seed, i), prims);
            RunRecord {
                value: outcome.value(),
                exhausted: matches!(outcome, Outcome::Exhausted(_)),
                steps,
            }
        })
        .collect();
    RunSummary { records }
}

/// Estimates the probability that `t` reduces to a numeral in `u`.
pub fn estimate_mass(
    t: &Term,
    u: &IntervalSet,
    runs: u64,
    budget: u64,
    seed: u64,
    delta: f64,
) -> Estimate {
    estimate_mass_with(PrimitiveTable::standard(), t, u, runs, budget, seed, delta)
}

pub fn estimate_mass_with(
    prims: &PrimitiveTable,
    t: &Term,
    u: &IntervalSet,
    runs: u64,
    budget: u64,
    seed: u64,
    delta: f64,
) -> Estimate {
    sample_runs(t, runs, budget, seed, prims).estimate(u, delta)
}
