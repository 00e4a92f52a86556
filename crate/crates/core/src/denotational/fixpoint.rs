use std::sync::{Arc, Mutex};

use serde::Serialize;

use super::{SemFunc, SemValue};
use crate::interval::IntervalSet;
use crate::measure::{LazyMeasure, Measure, MeasureError, QuadratureConfig, Query};
use crate::syntax::Type;

/// Stopping rule for Kleene iteration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixConfig {
    /// Iteration stops once the query value and every probe mass move by
    /// less than this between consecutive iterates, and the geometric
    /// extrapolation of the remaining movement is also below it.
    pub mass_tol: f64,
    pub max_iters: usize,
    /// Iterates checked before the stopping rule may fire, so that
    /// recursions needing several unfoldings before producing mass are not
    /// mistaken for converged zeros.
    pub min_iters: usize,
    /// Sets whose mass must also settle. The whole line is always probed.
    pub probe_sets: Vec<IntervalSet>,
}

impl Default for FixConfig {
    fn default() -> FixConfig {
        FixConfig {
            mass_tol: 1e-6,
            max_iters: 10_000,
            min_iters: 32,
            probe_sets: Vec::new(),
        }
    }
}

/// The bottom element at `ty`: the zero measure, or the function that is
/// constantly bottom.
pub fn zero_of(ty: &Type) -> SemValue {
    match ty {
        Type::Real => SemValue::Meas(Measure::zero()),
        Type::Arrow(a, b) => {
            let cod = (**b).clone();
            let inner = cod.clone();
            SemValue::Func(SemFunc::new((**a).clone(), cod, move |_| Ok(zero_of(&inner))))
        }
    }
}

/// `f⁰(⊥), f¹(⊥), …` shared by every use of one fixpoint.
struct Chain {
    f: SemFunc,
    iterates: Mutex<Vec<SemValue>>,
}

impl Chain {
    fn new(f: SemFunc, ty: &Type) -> Chain {
        Chain {
            f,
            iterates: Mutex::new(vec![zero_of(ty)]),
        }
    }

    fn get(&self, n: usize) -> Result<SemValue, MeasureError> {
        loop {
            let (len, last) = {
                let it = self.iterates.lock().unwrap();
                if n < it.len() {
                    return Ok(it[n].clone());
                }
                (it.len(), it[it.len() - 1].clone())
            };
            let next = self.f.apply(last)?;
            let mut it = self.iterates.lock().unwrap();
            if it.len() == len {
                it.push(next);
            }
        }
    }
}

/// The ground measure `(fix F) a₁ … aₖ`, evaluated as the limit of
/// `Fⁿ(⊥) a₁ … aₖ` at each query.
struct FixMeasure {
    chain: Arc<Chain>,
    args: Vec<SemValue>,
    cache: Mutex<Vec<Measure>>,
    cfg: FixConfig,
}

impl FixMeasure {
    fn iterate(&self, n: usize) -> Result<Measure, MeasureError> {
        if let Some(m) = self.cache.lock().unwrap().get(n) {
            return Ok(m.clone());
        }
        let mut out = None;
        let start = self.cache.lock().unwrap().len();
        for k in start..=n {
            let v = self.chain.get(k)?.apply_all(&self.args)?;
            let SemValue::Meas(m) = v else {
                return Err(MeasureError::Unsupported("fixpoint applied to too few arguments".into()));
            };
            let mut cache = self.cache.lock().unwrap();
            if cache.len() == k {
                cache.push(m.clone());
            }
            out = Some(m);
        }
        Ok(out.expect("n >= start"))
    }
}

impl LazyMeasure for FixMeasure {
    fn query(&self, q: &Query<'_>, quad: &QuadratureConfig) -> Result<f64, MeasureError> {
        let whole = IntervalSet::real();
        let mut prev: Option<Vec<f64>> = None;
        let mut last_change = f64::INFINITY;
        for n in 1..=self.cfg.max_iters {
            let m = self.iterate(n)?;
            let mut vals = vec![m.query(q, quad)?];
            for p in self.cfg.probe_sets.iter().chain(std::iter::once(&whole)) {
                vals.push(m.mass(p, quad)?);
            }
            if let Some(p) = &prev {
                let change = vals
                    .iter()
                    .zip(p)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                // Under geometric convergence with ratio ρ the mass still to
                // come is about change·ρ/(1−ρ), which can dwarf the change.
                let ratio = change / last_change;
                let tail = if ratio < 1.0 { change * ratio / (1.0 - ratio) } else { change };
                if n >= self.cfg.min_iters && change.max(tail) < self.cfg.mass_tol {
                    return Ok(vals[0]);
                }
                last_change = change;
            }
            prev = Some(vals);
        }
        Err(MeasureError::NonConvergent {
            iters: self.cfg.max_iters,
            last_masses: prev.unwrap_or_default(),
        })
    }

    fn label(&self) -> String {
        format!("fix/{}", self.args.len())
    }
}

/// The least fixpoint of `f : A → A` at `ty = A`. `quad` is used only to
/// recognize `f(0) = 0`.
pub fn fixpoint(
    f: &SemValue,
    ty: &Type,
    cfg: &FixConfig,
    quad: &QuadratureConfig,
) -> Result<SemValue, MeasureError> {
    let SemValue::Func(func) = f else {
        return Err(MeasureError::Unsupported("fix of a ground value".into()));
    };
    cfg_check(cfg)?;
    let chain = Arc::new(Chain::new(func.clone(), ty));
    if ty.is_real() {
        // F(0) = 0 makes 0 the least fixpoint. A measure of total mass 0 is 0.
        if let SemValue::Meas(m) = chain.get(1)? {
            if m.is_zero() || m.total_mass(quad)? == 0.0 {
                return Ok(SemValue::Meas(Measure::zero()));
            }
        }
    }
    Ok(collect(chain, ty.clone(), Vec::new(), cfg.clone()))
}

fn cfg_check(cfg: &FixConfig) -> Result<(), MeasureError> {
    if !(cfg.mass_tol > 0.0) || cfg.max_iters == 0 {
        return Err(MeasureError::Unsupported("invalid fixpoint configuration".into()));
    }
    Ok(())
}

// Gathers arguments until the ground type is reached.
fn collect(chain: Arc<Chain>, ty: Type, args: Vec<SemValue>, cfg: FixConfig) -> SemValue {
    match ty {
        Type::Real => SemValue::Meas(Measure::lazy(Arc::new(FixMeasure {
            chain,
            args,
            cache: Mutex::new(Vec::new()),
            cfg,
        }))),
        Type::Arrow(a, b) => {
            let cod = (*b).clone();
            SemValue::Func(SemFunc::new((*a).clone(), cod.clone(), move |v| {
                let mut args = args.clone();
                args.push(v);
                Ok(collect(chain.clone(), cod.clone(), args, cfg.clone()))
            }))
        }
    }
}

/// `⊥, f(⊥), …, fⁿ⁻¹(⊥)` at type `ty`.
pub fn kleene_iterates(f: &SemValue, ty: &Type, n: usize) -> Result<Vec<SemValue>, MeasureError> {
    let SemValue::Func(func) = f else {
        return Err(MeasureError::Unsupported("fix of a ground value".into()));
    };
    let chain = Chain::new(func.clone(), ty);
    (0..n).map(|k| chain.get(k)).collect()
}
