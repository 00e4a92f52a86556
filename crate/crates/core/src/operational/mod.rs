//! The sampling interpreter: leftmost call-by-name reduction where `sample`
//! draws from a uniform stream, and a Monte-Carlo estimator of the result
//! distribution.

mod estimate;
mod reduce;
mod rng;

pub use estimate::{
    dkw_bound, estimate_mass, estimate_mass_with, sample_runs, Estimate, RunRecord, RunSummary,
};
pub use reduce::{
    contract, decompose, run, run_counted, step, Decomposition, EvalContext, Frame, Outcome,
    Redex, RedexKind, StepError,
};
pub use rng::{RngStream, RUN_SPACING_BITS};
