use std::fmt;

use super::RngStream;
use crate::syntax::{substitute, Name, PrimOp, PrimitiveTable, Term, TermKind};

/// One layer of an evaluation context, outermost first in [`EvalContext`].
#[derive(Clone, Debug, PartialEq)]
pub enum Frame {
    /// `[] N`
    AppFun(Term),
    /// `ifz [] then M else N`
    IfzScrut(Term, Term),
    /// `let x = [] in N`
    LetBound(Name, Term),
    /// `f(r1, ..., r(i-1), [], M(i+1), ...)`
    PrimArg {
        op: PrimOp,
        done: Vec<f64>,
        rest: Vec<Term>,
    },
}

/// A term with one hole, in the shape allowed by the reduction strategy.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalContext {
    pub frames: Vec<Frame>,
}

impl EvalContext {
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Fills the hole with `t`.
    pub fn plug(&self, t: Term) -> Term {
        self.frames.iter().rev().fold(t, |inner, frame| match frame {
            Frame::AppFun(arg) => Term::app(inner, arg.clone()),
            Frame::IfzScrut(m, n) => Term::ifz(inner, m.clone(), n.clone()),
            Frame::LetBound(x, body) => TermKind::Let(x.clone(), inner, body.clone()).into(),
            Frame::PrimArg { op, done, rest } => {
                let mut args: Vec<Term> = done.iter().map(|r| Term::num(*r)).collect();
                args.push(inner);
                args.extend(rest.iter().cloned());
                TermKind::Prim(op.clone(), args).into()
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RedexKind {
    /// `(λx. M) N`
    Beta,
    /// `f(r1, ..., rn)`
    Prim,
    /// `ifz r then M else N`
    Ifz,
    /// `let x = r in N`
    Let,
    /// `fix M`
    Fix,
    /// `sample`
    Sample,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Redex {
    pub kind: RedexKind,
    pub term: Term,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decomposition {
    NormalForm,
    Split(EvalContext, Redex),
}

/// Splits `t` into an evaluation context and the redex in its hole, or
/// reports that `t` is a normal form. The descent is deterministic, so the
/// split is unique.
pub fn decompose(t: &Term) -> Decomposition {
    let mut frames = Vec::new();
    let mut cur = t.clone();
    loop {
        let next = match cur.kind() {
            TermKind::Var(_) | TermKind::Numeral(_) | TermKind::Abs(..) => {
                return Decomposition::NormalForm
            }
            TermKind::Sample => return split(frames, RedexKind::Sample, cur),
            TermKind::Fix(_) => return split(frames, RedexKind::Fix, cur),
            TermKind::App(f, a) => {
                if matches!(f.kind(), TermKind::Abs(..)) {
                    return split(frames, RedexKind::Beta, cur);
                }
                frames.push(Frame::AppFun(a.clone()));
                f.clone()
            }
            TermKind::Ifz(c, m, n) => {
                if c.as_numeral().is_some() {
                    return split(frames, RedexKind::Ifz, cur);
                }
                frames.push(Frame::IfzScrut(m.clone(), n.clone()));
                c.clone()
            }
            TermKind::Let(x, m, n) => {
                if m.as_numeral().is_some() {
                    return split(frames, RedexKind::Let, cur);
                }
                frames.push(Frame::LetBound(x.clone(), n.clone()));
                m.clone()
            }
            TermKind::Prim(op, args) => {
                let Some(i) = args.iter().position(|a| a.as_numeral().is_none()) else {
                    return split(frames, RedexKind::Prim, cur);
                };
                frames.push(Frame::PrimArg {
                    op: op.clone(),
                    done: args[..i].iter().filter_map(Term::as_numeral).collect(),
                    rest: args[i + 1..].to_vec(),
                });
                args[i].clone()
            }
        };
        cur = next;
    }
}

fn split(frames: Vec<Frame>, kind: RedexKind, term: Term) -> Decomposition {
    Decomposition::Split(EvalContext { frames }, Redex { kind, term })
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum StepError {
    /// `step` was asked to reduce something it cannot: a normal form, or a
    /// primitive missing from the table.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

/// Contracts a redex. Only `sample` touches `rng`.
pub fn contract(
    redex: &Redex,
    rng: &mut RngStream,
    prims: &PrimitiveTable,
) -> Result<Term, StepError> {
    let bad = || StepError::InvariantViolation(format!("not a {:?} redex: {}", redex.kind, redex.term));
    Ok(match (redex.kind, redex.term.kind()) {
        (RedexKind::Beta, TermKind::App(f, a)) => match f.kind() {
            TermKind::Abs(x, _, body) => substitute(body, x, a),
            _ => return Err(bad()),
        },
        (RedexKind::Prim, TermKind::Prim(op, args)) => {
            let nums: Vec<f64> = args.iter().filter_map(Term::as_numeral).collect();
            if nums.len() != args.len() || prims.arity(op) != Some(nums.len()) {
                return Err(bad());
            }
            let r = prims
                .eval(op, &nums)
                .ok_or_else(|| StepError::InvariantViolation(format!("unknown primitive {op}")))?;
            Term::num(r)
        }
        (RedexKind::Ifz, TermKind::Ifz(c, m, n)) => match c.as_numeral() {
            Some(r) if r == 0.0 => m.clone(),
            Some(_) => n.clone(),
            None => return Err(bad()),
        },
        (RedexKind::Let, TermKind::Let(x, m, n)) => match m.as_numeral() {
            Some(_) => substitute(n, x, m),
            None => return Err(bad()),
        },
        (RedexKind::Fix, TermKind::Fix(m)) => Term::app(m.clone(), redex.term.clone()),
        (RedexKind::Sample, TermKind::Sample) => Term::num(rng.uniform()),
        _ => return Err(bad()),
    })
}

/// Performs one reduction step `E[R] -> E[R']`.
pub fn step(t: &Term, rng: &mut RngStream, prims: &PrimitiveTable) -> Result<Term, StepError> {
    match decompose(t) {
        Decomposition::NormalForm => Err(StepError::InvariantViolation(format!(
            "step called on the normal form {t}"
        ))),
        Decomposition::Split(ctx, redex) => Ok(ctx.plug(contract(&redex, rng, prims)?)),
    }
}

/// How a run ended.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    /// Reached the numeral `r`.
    Value(f64),
    /// Reached a normal form that is not a numeral (possible only for open
    /// or higher-type terms, or primitives missing from the table).
    StuckNormal(Term),
    /// Still reducible after the whole budget of steps.
    Exhausted(u64),
}

impl Outcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            Outcome::Value(r) => Some(*r),
            _ => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Value(r) => write!(f, "{}", crate::syntax::fmt_real(*r)),
            Outcome::StuckNormal(t) => write!(f, "stuck at {t}"),
            Outcome::Exhausted(n) => write!(f, "no value after {n} steps"),
        }
    }
}

/// Reduces `t` for at most `budget` steps.
pub fn run(t: &Term, budget: u64, rng: RngStream, prims: &PrimitiveTable) -> Outcome {
    run_counted(t, budget, rng, prims).0
}

/// [`run`], also returning the number of steps taken.
pub fn run_counted(
    t: &Term,
    budget: u64,
    mut rng: RngStream,
    prims: &PrimitiveTable,
) -> (Outcome, u64) {
    let mut cur = t.clone();
    for steps in 0..=budget {
        match decompose(&cur) {
            Decomposition::NormalForm => {
                let outcome = match cur.as_numeral() {
                    Some(r) => Outcome::Value(r),
                    None => Outcome::StuckNormal(cur),
                };
                return (outcome, steps);
            }
            Decomposition::Split(_, _) if steps == budget => break,
            Decomposition::Split(ctx, redex) => match contract(&redex, &mut rng, prims) {
                Ok(c) => cur = ctx.plug(c),
                Err(_) => return (Outcome::StuckNormal(cur), steps),
            },
        }
    }
    (Outcome::Exhausted(budget), budget)
}
