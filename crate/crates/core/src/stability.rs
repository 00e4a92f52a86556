//! Finite differences of functions on the unit cube `[0,1]^k`, and a grid
//! check that every signed difference sum satisfies `Δ⁻ ≤ Δ⁺`.
//!
//! For increments `u₁ … uₘ`, `Δ⁺` sums `f(x + Σ_{i∈I} uᵢ)` over the subsets
//! `I` with `m − |I|` even and `Δ⁻` over those with `m − |I|` odd, so that
//! `Δ⁺ − Δ⁻` is the iterated difference. Both are symmetric in the
//! increments, which lets the grid check enumerate increment multisets.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::operational::{run, Outcome, RngStream};
use crate::syntax::{substitute, Name, PrimitiveTable, Term, TermKind};

type EvalFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A total function `[0,1]^k → ℝ₊`.
#[derive(Clone)]
pub struct PointFn {
    pub k: usize,
    eval: Arc<EvalFn>,
    pub label: String,
}

impl fmt::Debug for PointFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PointFn({}, k = {})", self.label, self.k)
    }
}

impl PointFn {
    pub fn new(
        k: usize,
        label: impl Into<String>,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> PointFn {
        PointFn {
            k,
            eval: Arc::new(eval),
            label: label.into(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.k);
        (self.eval)(x)
    }

    /// `s + t − st`.
    pub fn wpor() -> PointFn {
        PointFn::new(2, "wpor", |x| x[0] + x[1] - x[0] * x[1])
    }

    pub fn identity() -> PointFn {
        PointFn::new(1, "x", |x| x[0])
    }

    /// `Σ cᵢ xⁱ` in one variable.
    pub fn polynomial(coeffs: &[f64]) -> PointFn {
        let c = coeffs.to_vec();
        let label = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| {
                let coeff = if *c == 1.0 && i > 0 { String::new() } else { c.to_string() };
                match i {
                    0 => coeff,
                    1 => format!("{coeff}x"),
                    _ => format!("{coeff}x^{i}"),
                }
            })
            .collect::<Vec<_>>()
            .join(" + ");
        PointFn::new(1, if label.is_empty() { "0".into() } else { label }, move |x| {
            c.iter().rev().fold(0.0, |acc, ci| acc * x[0] + ci)
        })
    }

    /// `αf + βg`.
    pub fn combine(alpha: f64, f: &PointFn, beta: f64, g: &PointFn) -> PointFn {
        assert_eq!(f.k, g.k, "combined functions must share a domain");
        let (f2, g2) = (f.clone(), g.clone());
        PointFn::new(
            f.k,
            format!("{alpha}({}) + {beta}({})", f.label, g.label),
            move |x| alpha * f2.eval(x) + beta * g2.eval(x),
        )
    }

    /// The function of `vars` computed by a sample-free term of type real,
    /// evaluated by reduction after substituting numerals.
    pub fn from_term(
        term: &Term,
        vars: &[Name],
        prims: &PrimitiveTable,
        budget: u64,
    ) -> Result<PointFn, String> {
        if uses_sample(term) {
            return Err("the function must not sample".into());
        }
        let (term, vars, prims) = (term.clone(), vars.to_vec(), prims.clone());
        let label = crate::parser::pretty(&term);
        Ok(PointFn::new(vars.len(), label, move |x| {
            let closed = vars
                .iter()
                .zip(x)
                .fold(term.clone(), |t, (v, xi)| substitute(&t, v, &Term::num(*xi)));
            match run(&closed, budget, RngStream::new(0, 0), &prims) {
                Outcome::Value(r) => r,
                _ => f64::NAN,
            }
        }))
    }
}

fn uses_sample(t: &Term) -> bool {
    match t.kind() {
        TermKind::Sample => true,
        TermKind::Var(_) | TermKind::Numeral(_) => false,
        TermKind::Abs(_, _, b) | TermKind::Fix(b) => uses_sample(b),
        TermKind::App(a, b) | TermKind::Let(_, a, b) => uses_sample(a) || uses_sample(b),
        TermKind::Ifz(a, b, c) => uses_sample(a) || uses_sample(b) || uses_sample(c),
        TermKind::Prim(_, args) => args.iter().any(uses_sample),
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("point {point:?} lies outside the unit cube")]
pub struct DomainError {
    pub point: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

const CUBE_EPS: f64 = 1e-12;

fn check_domain(k: usize, x: &[f64], us: &[Vec<f64>]) -> Result<(), DomainError> {
    let mut top = x.to_vec();
    let bad = |p: &[f64]| p.len() != k || p.iter().any(|c| !(-CUBE_EPS..=1.0 + CUBE_EPS).contains(c));
    if bad(x) {
        return Err(DomainError { point: x.to_vec() });
    }
    for u in us {
        if u.len() != k || u.iter().any(|c| *c < -CUBE_EPS) {
            return Err(DomainError { point: u.clone() });
        }
        for (t, c) in top.iter_mut().zip(u) {
            *t += c;
        }
    }
    if bad(&top) {
        return Err(DomainError { point: top });
    }
    Ok(())
}

// Clamps rounding overshoot back into the cube.
fn shifted(x: &[f64], us: &[Vec<f64>], mask: u64) -> Vec<f64> {
    let mut p = x.to_vec();
    for (i, u) in us.iter().enumerate() {
        if mask >> i & 1 == 1 {
            for (pc, uc) in p.iter_mut().zip(u) {
                *pc += uc;
            }
        }
    }
    p.iter().map(|c| c.clamp(0.0, 1.0)).collect()
}

/// `Δ⁺` or `Δ⁻` of `f` at `x` with increments `us`.
pub fn delta_signed(f: &PointFn, x: &[f64], us: &[Vec<f64>], sign: Sign) -> Result<f64, DomainError> {
    check_domain(f.k, x, us)?;
    Ok(delta_pair(f, x, us).into_sign(sign))
}

struct Pair {
    plus: f64,
    minus: f64,
}

impl Pair {
    fn into_sign(self, sign: Sign) -> f64 {
        match sign {
            Sign::Plus => self.plus,
            Sign::Minus => self.minus,
        }
    }
}

fn delta_pair(f: &PointFn, x: &[f64], us: &[Vec<f64>]) -> Pair {
    let m = us.len();
    assert!(m < 64, "too many increments");
    let mut pair = Pair { plus: 0.0, minus: 0.0 };
    for mask in 0..1u64 << m {
        let v = f.eval(&shifted(x, us, mask));
        if (m - mask.count_ones() as usize).is_multiple_of(2) {
            pair.plus += v;
        } else {
            pair.minus += v;
        }
    }
    pair
}

/// `Δf(x; u₁ … uₘ)` by the recursion `f_{i+1}(x) = f_i(x + u_{i+1}) − f_i(x)`.
pub fn iterated_delta(f: &PointFn, x: &[f64], us: &[Vec<f64>]) -> Result<f64, DomainError> {
    check_domain(f.k, x, us)?;
    fn rec(f: &PointFn, x: &[f64], us: &[Vec<f64>]) -> f64 {
        match us.split_last() {
            None => f.eval(&x.iter().map(|c| c.clamp(0.0, 1.0)).collect::<Vec<_>>()),
            Some((u, rest)) => {
                let moved: Vec<f64> = x.iter().zip(u).map(|(a, b)| a + b).collect();
                rec(f, &moved, rest) - rec(f, x, rest)
            }
        }
    }
    Ok(rec(f, x, us))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub x: Vec<f64>,
    pub increments: Vec<Vec<f64>>,
    pub delta_minus: f64,
    pub delta_plus: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub function: String,
    pub n: usize,
    pub grid: usize,
    pub slack: f64,
    /// Whether every grid case was checked, rather than a seeded sample.
    pub exhaustive: bool,
    pub cases: u64,
    pub violations: Vec<Violation>,
    pub verdict: Verdict,
}

impl StabilityReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Enumeration limits for [`check_pre_stable_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridOptions {
    /// Cases drawn when the grid is too large to enumerate.
    pub samples: u64,
    pub seed: u64,
}

impl Default for GridOptions {
    fn default() -> GridOptions {
        GridOptions {
            samples: 200_000,
            seed: 0x5eed,
        }
    }
}

pub const DEFAULT_GRID: usize = 8;
pub const DEFAULT_SLACK: f64 = 1e-9;

/// Checks `Δ⁻ ≤ Δ⁺ + slack` for increment tuples of length `1 ..= n + 1`
/// on the grid with `grid` steps per axis.
pub fn check_pre_stable(f: &PointFn, n: usize, grid: usize, slack: f64) -> StabilityReport {
    check_pre_stable_with(f, n, grid, slack, GridOptions::default())
}

pub fn check_pre_stable_with(
    f: &PointFn,
    n: usize,
    grid: usize,
    slack: f64,
    opts: GridOptions,
) -> StabilityReport {
    assert!(grid >= 2, "grid needs at least two steps");
    let k = f.k;
    let exhaustive = k == 1 || (k <= 2 && n <= 3);
    let to_real = |v: &[usize]| v.iter().map(|c| *c as f64 / grid as f64).collect::<Vec<f64>>();
    let test = |x: &[usize], us: &[Vec<usize>]| -> Option<Violation> {
        let xr = to_real(x);
        let ur: Vec<Vec<f64>> = us.iter().map(|u| to_real(u)).collect();
        let p = delta_pair(f, &xr, &ur);
        (p.minus > p.plus + slack).then(|| Violation {
            x: xr,
            increments: ur,
            delta_minus: p.minus,
            delta_plus: p.plus,
        })
    };
    let points = lattice(k, grid);
    let (cases, violations) = if exhaustive {
        let steps: Vec<Vec<usize>> = points.iter().filter(|v| v.iter().any(|c| *c > 0)).cloned().collect();
        let per_point: Vec<(u64, Vec<Violation>)> = points
            .par_iter()
            .map(|x| {
                let mut cases = 0;
                let mut found = Vec::new();
                let room: Vec<usize> = x.iter().map(|c| grid - c).collect();
                let mut chosen = Vec::new();
                multisets(&steps, 0, &room, n + 1, &mut chosen, &mut |us| {
                    cases += 1;
                    found.extend(test(x, us));
                });
                (cases, found)
            })
            .collect();
        per_point.into_iter().fold((0, Vec::new()), |(c, mut v), (c2, v2)| {
            v.extend(v2);
            (c + c2, v)
        })
    } else {
        let found: Vec<Violation> = (0..opts.samples)
            .into_par_iter()
            .filter_map(|i| {
                let mut rng = RngStream::for_run(opts.seed, i);
                let (x, us) = random_case(&mut rng, k, n, grid);
                test(&x, &us)
            })
            .collect();
        (opts.samples, found)
    };
    let verdict = if violations.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    StabilityReport {
        function: f.label.clone(),
        n,
        grid,
        slack,
        exhaustive,
        cases,
        violations,
        verdict,
    }
}

/// All points of `{0, …, grid}^k`, in lexicographic order.
fn lattice(k: usize, grid: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..=grid).map(move |c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    out
}

// Non-decreasing index sequences of `steps` of length 1..=max_len whose sum
// fits in `room`.
fn multisets(
    steps: &[Vec<usize>],
    from: usize,
    room: &[usize],
    max_len: usize,
    chosen: &mut Vec<Vec<usize>>,
    visit: &mut impl FnMut(&[Vec<usize>]),
) {
    if chosen.len() == max_len {
        return;
    }
    for (i, s) in steps.iter().enumerate().skip(from) {
        if s.iter().zip(room).any(|(a, r)| a > r) {
            continue;
        }
        let left: Vec<usize> = room.iter().zip(s).map(|(r, a)| r - a).collect();
        chosen.push(s.clone());
        visit(chosen);
        multisets(steps, i, &left, max_len, chosen, visit);
        chosen.pop();
    }
}

fn random_case(rng: &mut RngStream, k: usize, n: usize, grid: usize) -> (Vec<usize>, Vec<Vec<usize>>) {
    let mut pick = |hi: usize| ((rng.uniform() * (hi + 1) as f64) as usize).min(hi);
    let x: Vec<usize> = (0..k).map(|_| pick(grid)).collect();
    let len = 1 + pick(n);
    let mut room: Vec<usize> = x.iter().map(|c| grid - c).collect();
    let mut us = Vec::with_capacity(len);
    for _ in 0..len {
        let u: Vec<usize> = room.iter().map(|r| pick(*r)).collect();
        for (r, c) in room.iter_mut().zip(&u) {
            *r -= c;
        }
        us.push(u);
    }
    (x, us)
}
