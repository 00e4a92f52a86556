//! Finite measures on the real line.
//!
//! A [`Measure`] is either concrete (Dirac atoms plus weighted densities) or
//! one of several queryable forms that are only ever asked for `mass(U)` or
//! `∫ g dμ`: mixtures, pushforwards along primitives, integrals of a
//! measure-valued function against a measure (`bind`), and externally
//! defined lazy measures such as fixpoints. Queries against non-concrete
//! measures are memoized, so shared sub-measures are evaluated once per set.

mod preimage;
pub mod quadrature;

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::Serialize;

pub use preimage::preimage;
pub use quadrature::QuadratureConfig;

use crate::interval::IntervalSet;
use crate::syntax::Primitive;

/// Largest number of continuous dimensions a pushforward may integrate over.
pub const MAX_DIMENSIONS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, thiserror::Error)]
pub enum MeasureError {
    #[error("quadrature failed to converge on [{lo}, {hi}] (last refinement moved the estimate by {estimate_change:e})")]
    QuadratureFailure {
        lo: f64,
        hi: f64,
        estimate_change: f64,
    },
    #[error("pushforward over {dims} continuous dimensions; at most {MAX_DIMENSIONS} are supported")]
    DimensionLimit { dims: usize },
    #[error("fixpoint iteration did not converge after {iters} iterations (last probe masses {last_masses:?})")]
    NonConvergent { iters: usize, last_masses: Vec<f64> },
    #[error("{0}")]
    Unsupported(String),
}

pub type PdfFn = dyn Fn(f64) -> f64 + Send + Sync;
pub type KernelFn = dyn Fn(f64) -> Result<Measure, MeasureError> + Send + Sync;

/// `weight · pdf(x) dx` restricted to `support`.
#[derive(Clone)]
pub struct Density {
    pub support: IntervalSet,
    pub pdf: Arc<PdfFn>,
    /// An antiderivative of `pdf`, used for exact interval masses.
    pub cdf: Option<Arc<PdfFn>>,
    pub weight: f64,
}

/// A measure that answers queries itself, e.g. a least fixpoint computed
/// on demand.
pub trait LazyMeasure: Send + Sync {
    fn query(&self, q: &Query<'_>, cfg: &QuadratureConfig) -> Result<f64, MeasureError>;

    /// Continuous dimensions a query may integrate over.
    fn dims(&self) -> usize {
        1
    }

    fn label(&self) -> String;
}

enum Kind {
    Concrete {
        atoms: Vec<(f64, f64)>,
        densities: Vec<Density>,
    },
    Mix(Vec<(f64, Measure)>),
    Pushforward {
        prim: Primitive,
        args: Vec<Measure>,
    },
    Bind {
        bound: Measure,
        body: Arc<KernelFn>,
    },
    Lazy(Arc<dyn LazyMeasure>),
}

type MemoKey = (IntervalSet, [u64; 6]);

struct Node {
    id: u64,
    kind: Kind,
    /// Masses of sets already queried.
    masses: Mutex<HashMap<MemoKey, f64>>,
}

/// A finite measure on ℝ. Cloning shares the underlying node.
#[derive(Clone)]
pub struct Measure(Arc<Node>);

static NEXT_ID: AtomicU64 = AtomicU64::new(0);

/// A functional to evaluate against a measure: the mass of a set, or the
/// integral of a function.
pub struct Query<'a> {
    kind: QueryKind<'a>,
    /// Values already computed for this very functional, by node id.
    seen: RefCell<HashMap<u64, f64>>,
}

enum QueryKind<'a> {
    Indicator(&'a IntervalSet),
    Func(&'a dyn Fn(f64) -> Result<f64, MeasureError>),
}

impl<'a> Query<'a> {
    pub fn indicator(u: &'a IntervalSet) -> Query<'a> {
        Query {
            kind: QueryKind::Indicator(u),
            seen: RefCell::default(),
        }
    }

    pub fn func(g: &'a dyn Fn(f64) -> Result<f64, MeasureError>) -> Query<'a> {
        Query {
            kind: QueryKind::Func(g),
            seen: RefCell::default(),
        }
    }

    /// The integrand at `x`.
    pub fn at(&self, x: f64) -> Result<f64, MeasureError> {
        match self.kind {
            QueryKind::Indicator(u) => Ok(if u.contains(x) { 1.0 } else { 0.0 }),
            QueryKind::Func(g) => g(x),
        }
    }

    pub fn as_indicator(&self) -> Option<&'a IntervalSet> {
        match self.kind {
            QueryKind::Indicator(u) => Some(u),
            QueryKind::Func(_) => None,
        }
    }
}

fn merge_atoms(mut atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    atoms.retain(|(_, w)| *w > 0.0);
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (x, w) in atoms {
        match out.last_mut() {
            Some((y, v)) if *y == x => *v += w,
            _ => out.push((x, w)),
        }
    }
    out
}

impl Measure {
    fn from_kind(kind: Kind) -> Measure {
        Measure(Arc::new(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            kind,
            masses: Mutex::default(),
        }))
    }

    fn concrete(atoms: Vec<(f64, f64)>, densities: Vec<Density>) -> Measure {
        let densities = densities
            .into_iter()
            .filter(|d| d.weight > 0.0 && !d.support.is_empty())
            .collect();
        Measure::from_kind(Kind::Concrete {
            atoms: merge_atoms(atoms),
            densities,
        })
    }

    pub fn zero() -> Measure {
        Measure::concrete(Vec::new(), Vec::new())
    }

    /// `δ_r`
    pub fn dirac(r: f64) -> Measure {
        Measure::concrete(vec![(r, 1.0)], Vec::new())
    }

    /// A finite sum of weighted atoms; equal locations merge.
    pub fn atoms(atoms: impl IntoIterator<Item = (f64, f64)>) -> Measure {
        Measure::concrete(atoms.into_iter().collect(), Vec::new())
    }

    /// Lebesgue measure on `[0, 1]`.
    pub fn uniform01() -> Measure {
        Measure::concrete(
            Vec::new(),
            vec![Density {
                support: IntervalSet::closed(0.0, 1.0),
                pdf: Arc::new(|_| 1.0),
                cdf: Some(Arc::new(|x| x.clamp(0.0, 1.0))),
                weight: 1.0,
            }],
        )
    }

    /// `weight · pdf(x) dx` on `support`. Parts of the support outside the
    /// quadrature window are ignored when querying.
    pub fn density(
        support: IntervalSet,
        pdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        weight: f64,
    ) -> Measure {
        assert!(weight >= 0.0, "density weights are non-negative");
        Measure::concrete(
            Vec::new(),
            vec![Density {
                support,
                pdf: Arc::new(pdf),
                cdf: None,
                weight,
            }],
        )
    }

    pub(crate) fn lazy(l: Arc<dyn LazyMeasure>) -> Measure {
        Measure::from_kind(Kind::Lazy(l))
    }

    /// `Σ cᵢ μᵢ`. Concrete parts are merged into one concrete measure.
    pub fn mix(coeffs: &[f64], measures: &[Measure]) -> Measure {
        assert_eq!(coeffs.len(), measures.len(), "one coefficient per measure");
        let parts: Vec<(f64, Measure)> = coeffs
            .iter()
            .zip(measures)
            .filter(|(c, m)| **c > 0.0 && !m.is_zero())
            .map(|(c, m)| (*c, m.clone()))
            .collect();
        match parts.as_slice() {
            [] => return Measure::zero(),
            [(c, m)] if *c == 1.0 => return m.clone(),
            _ => {}
        }
        if parts.iter().all(|(_, m)| m.is_concrete()) {
            let mut atoms = Vec::new();
            let mut densities = Vec::new();
            for (c, m) in &parts {
                if let Kind::Concrete { atoms: a, densities: d } = &m.0.kind {
                    atoms.extend(a.iter().map(|(x, w)| (*x, c * w)));
                    densities.extend(d.iter().map(|d| Density {
                        weight: c * d.weight,
                        ..d.clone()
                    }));
                }
            }
            return Measure::concrete(atoms, densities);
        }
        Measure::from_kind(Kind::Mix(parts))
    }

    pub fn scale(&self, c: f64) -> Measure {
        Measure::mix(&[c], std::slice::from_ref(self))
    }

    /// The image of `μ₁ ⊗ … ⊗ μₙ` under `prim`. Purely atomic arguments give
    /// atoms directly; anything else is integrated when queried.
    pub fn pushforward(prim: &Primitive, args: Vec<Measure>) -> Result<Measure, MeasureError> {
        if args.len() != prim.arity {
            return Err(MeasureError::Unsupported(format!(
                "primitive {} takes {} arguments, given {}",
                prim.name,
                prim.arity,
                args.len()
            )));
        }
        if args.iter().any(Measure::is_zero) {
            return Ok(Measure::zero());
        }
        if let Some(atom_lists) = args.iter().map(|a| a.atoms_only()).collect::<Option<Vec<_>>>() {
            let mut out = Vec::new();
            for_each_combination(&atom_lists, &mut |vals, w| out.push((prim.apply(vals), w)));
            return Ok(Measure::atoms(out));
        }
        let dims: usize = args.iter().map(Measure::dims).sum();
        if dims > MAX_DIMENSIONS {
            return Err(MeasureError::DimensionLimit { dims });
        }
        Ok(Measure::from_kind(Kind::Pushforward {
            prim: prim.clone(),
            args,
        }))
    }

    /// `U ↦ ∫ body(r)(U) bound(dr)`. Atoms of `bound` are expanded at once.
    pub fn bind(
        bound: &Measure,
        body: impl Fn(f64) -> Result<Measure, MeasureError> + Send + Sync + 'static,
    ) -> Result<Measure, MeasureError> {
        if let Some(atoms) = bound.atoms_only() {
            let (ws, ms): (Vec<f64>, Vec<Measure>) = atoms
                .iter()
                .map(|(x, w)| Ok((*w, body(*x)?)))
                .collect::<Result<Vec<_>, MeasureError>>()?
                .into_iter()
                .unzip();
            return Ok(Measure::mix(&ws, &ms));
        }
        Ok(Measure::from_kind(Kind::Bind {
            bound: bound.clone(),
            body: Arc::new(body),
        }))
    }

    fn is_concrete(&self) -> bool {
        matches!(self.0.kind, Kind::Concrete { .. })
    }

    /// True only for a measure known to be zero without integrating.
    pub fn is_zero(&self) -> bool {
        matches!(&self.0.kind, Kind::Concrete { atoms, densities } if atoms.is_empty() && densities.is_empty())
    }

    /// The atoms, when the measure is a finite sum of atoms.
    pub fn atoms_only(&self) -> Option<&[(f64, f64)]> {
        match &self.0.kind {
            Kind::Concrete { atoms, densities } if densities.is_empty() => Some(atoms),
            _ => None,
        }
    }

    /// The location of a unit atom, when the measure is exactly one.
    pub fn as_dirac(&self) -> Option<f64> {
        match self.atoms_only() {
            Some([(x, w)]) if *w == 1.0 => Some(*x),
            _ => None,
        }
    }

    /// Number of nested continuous integrals a query may need.
    pub fn dims(&self) -> usize {
        match &self.0.kind {
            Kind::Concrete { densities, .. } => usize::from(!densities.is_empty()),
            Kind::Mix(parts) => parts.iter().map(|(_, m)| m.dims()).max().unwrap_or(0),
            Kind::Pushforward { args, .. } => args.iter().map(Measure::dims).sum(),
            Kind::Bind { bound, .. } => bound.dims(),
            Kind::Lazy(l) => l.dims(),
        }
    }

    /// `μ(U)`
    pub fn mass(&self, u: &IntervalSet, cfg: &QuadratureConfig) -> Result<f64, MeasureError> {
        self.query(&Query::indicator(u), cfg)
    }

    /// `μ(ℝ)`
    pub fn total_mass(&self, cfg: &QuadratureConfig) -> Result<f64, MeasureError> {
        self.mass(&IntervalSet::real(), cfg)
    }

    /// `∫ g dμ`
    pub fn integrate(
        &self,
        g: &dyn Fn(f64) -> f64,
        cfg: &QuadratureConfig,
    ) -> Result<f64, MeasureError> {
        self.query(&Query::func(&|x| Ok(g(x))), cfg)
    }

    /// `∫ g dμ` for an integrand that can itself fail.
    pub fn integrate_fallible(
        &self,
        g: &dyn Fn(f64) -> Result<f64, MeasureError>,
        cfg: &QuadratureConfig,
    ) -> Result<f64, MeasureError> {
        self.query(&Query::func(g), cfg)
    }

    pub fn query(&self, q: &Query<'_>, cfg: &QuadratureConfig) -> Result<f64, MeasureError> {
        if let Kind::Concrete { atoms, densities } = &self.0.kind {
            return concrete_query(atoms, densities, q, cfg);
        }
        let node = &self.0;
        let key = q.as_indicator().map(|u| (u.clone(), cfg.fingerprint()));
        let cached = match &key {
            Some(k) => node.masses.lock().expect("memo lock").get(k).copied(),
            None => q.seen.borrow().get(&node.id).copied(),
        };
        if let Some(v) = cached {
            return Ok(v);
        }
        let v = match &node.kind {
            Kind::Concrete { .. } => unreachable!("handled above"),
            Kind::Mix(parts) => {
                let mut total = 0.0;
                for (c, m) in parts {
                    total += c * m.query(q, cfg)?;
                }
                total
            }
            Kind::Pushforward { prim, args } => pushforward_query(prim, args, q, cfg)?,
            Kind::Bind { bound, body } => {
                let inner = |r: f64| body(r)?.query(q, cfg);
                bound.query(&Query::func(&inner), cfg)?
            }
            Kind::Lazy(l) => l.query(q, cfg)?,
        };
        match key {
            Some(k) => {
                node.masses.lock().expect("memo lock").insert(k, v);
            }
            None => {
                q.seen.borrow_mut().insert(node.id, v);
            }
        }
        Ok(v)
    }

    /// Parts of density supports cut off by the quadrature window. Mass
    /// there is not seen by any query.
    pub fn truncated_supports(&self, cfg: &QuadratureConfig) -> Vec<IntervalSet> {
        let outside = IntervalSet::closed(cfg.truncation.0, cfg.truncation.1).complement();
        match &self.0.kind {
            Kind::Concrete { densities, .. } => densities
                .iter()
                .map(|d| d.support.intersect(&outside))
                .filter(|s| !s.is_empty())
                .collect(),
            Kind::Mix(parts) => parts.iter().flat_map(|(_, m)| m.truncated_supports(cfg)).collect(),
            Kind::Pushforward { args, .. } => {
                args.iter().flat_map(|m| m.truncated_supports(cfg)).collect()
            }
            Kind::Bind { bound, .. } => bound.truncated_supports(cfg),
            Kind::Lazy(_) => Vec::new(),
        }
    }
}

impl fmt::Debug for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.kind {
            Kind::Concrete { atoms, densities } => {
                let mut parts: Vec<String> = atoms.iter().map(|(x, w)| format!("{w}·δ{x}")).collect();
                parts.extend(densities.iter().map(|d| format!("{}·pdf on {}", d.weight, d.support)));
                if parts.is_empty() {
                    f.write_str("0")
                } else {
                    f.write_str(&parts.join(" + "))
                }
            }
            Kind::Mix(parts) => {
                let parts: Vec<String> = parts.iter().map(|(c, m)| format!("{c}·({m:?})")).collect();
                f.write_str(&parts.join(" + "))
            }
            Kind::Pushforward { prim, args } => write!(f, "{}#({args:?})", prim.name),
            Kind::Bind { bound, .. } => write!(f, "bind({bound:?}, <kernel>)"),
            Kind::Lazy(l) => f.write_str(&l.label()),
        }
    }
}

fn concrete_query(
    atoms: &[(f64, f64)],
    densities: &[Density],
    q: &Query<'_>,
    cfg: &QuadratureConfig,
) -> Result<f64, MeasureError> {
    let mut total = 0.0;
    for (x, w) in atoms {
        total += w * q.at(*x)?;
    }
    let window = IntervalSet::closed(cfg.truncation.0, cfg.truncation.1);
    for d in densities {
        let region = match q.kind {
            QueryKind::Indicator(u) => d.support.intersect(u).intersect(&window),
            QueryKind::Func(_) => d.support.intersect(&window),
        };
        for part in region.intervals() {
            let piece = match q.kind {
                QueryKind::Indicator(_) => match &d.cdf {
                    Some(cdf) => cdf(part.hi) - cdf(part.lo),
                    None => quadrature::integrate(&mut |x| Ok((d.pdf)(x)), part.lo, part.hi, cfg)?,
                },
                QueryKind::Func(g) => quadrature::integrate(
                    &mut |x| {
                        let p = (d.pdf)(x);
                        if p == 0.0 {
                            Ok(0.0)
                        } else {
                            Ok(p * g(x)?)
                        }
                    },
                    part.lo,
                    part.hi,
                    cfg,
                )?,
            };
            total += d.weight * piece;
        }
    }
    Ok(total)
}

/// Calls `f(values, weight)` for every combination of one atom per list.
fn for_each_combination(lists: &[&[(f64, f64)]], f: &mut dyn FnMut(&[f64], f64)) {
    fn go(lists: &[&[(f64, f64)]], vals: &mut Vec<f64>, w: f64, f: &mut dyn FnMut(&[f64], f64)) {
        match lists.split_first() {
            None => f(vals, w),
            Some((first, rest)) => {
                for (x, v) in first.iter() {
                    vals.push(*x);
                    go(rest, vals, w * v, f);
                    vals.pop();
                }
            }
        }
    }
    go(lists, &mut Vec::with_capacity(lists.len()), 1.0, f);
}

fn pushforward_query(
    prim: &Primitive,
    args: &[Measure],
    q: &Query<'_>,
    cfg: &QuadratureConfig,
) -> Result<f64, MeasureError> {
    if let Some(u) = q.as_indicator() {
        if let Some(v) = exact_section_mass(prim, args, u, cfg)? {
            return Ok(v);
        }
    }
    nested_query(prim, args, Vec::with_capacity(args.len()), q, cfg)
}

/// With a single non-atomic argument, the mass of `U` is a sum over atom
/// combinations of the other arguments of that argument's mass on an exact
/// preimage, provided the primitive is piecewise monotone in it.
fn exact_section_mass(
    prim: &Primitive,
    args: &[Measure],
    u: &IntervalSet,
    cfg: &QuadratureConfig,
) -> Result<Option<f64>, MeasureError> {
    let continuous: Vec<usize> = (0..args.len()).filter(|i| args[*i].atoms_only().is_none()).collect();
    let [i] = continuous.as_slice() else {
        return Ok(None);
    };
    let i = *i;
    let placeholder: &[(f64, f64)] = &[(0.0, 1.0)];
    let lists: Vec<&[(f64, f64)]> = args
        .iter()
        .enumerate()
        .map(|(j, a)| if j == i { placeholder } else { a.atoms_only().expect("atomic") })
        .collect();
    let mut sections = Vec::new();
    let mut monotone = true;
    for_each_combination(&lists, &mut |vals, w| match prim.section_pieces(i, vals) {
        Some(pieces) => sections.push((vals.to_vec(), pieces, w)),
        None => monotone = false,
    });
    if !monotone {
        return Ok(None);
    }
    let mut total = 0.0;
    for (vals, pieces, w) in sections {
        let f = |x: f64| {
            let mut v = vals.clone();
            v[i] = x;
            prim.apply(&v)
        };
        let pre = preimage(&f, &pieces, u);
        if !pre.is_empty() {
            total += w * args[i].mass(&pre, cfg)?;
        }
    }
    Ok(Some(total))
}

fn nested_query(
    prim: &Primitive,
    args: &[Measure],
    prefix: Vec<f64>,
    q: &Query<'_>,
    cfg: &QuadratureConfig,
) -> Result<f64, MeasureError> {
    let k = prefix.len();
    if k == args.len() {
        return q.at(prim.apply(&prefix));
    }
    let inner = |r: f64| {
        let mut p = prefix.clone();
        p.push(r);
        nested_query(prim, args, p, q, cfg)
    };
    args[k].query(&Query::func(&inner), cfg)
}
