//! The measure-valued interpretation of terms.
//!
//! A ground-type term denotes a finite measure on ℝ; a term of arrow type
//! denotes a host closure on semantic values. `let` integrates its body
//! against the bound measure, `ifz` splits on the mass the scrutinee puts on
//! zero, primitives push measures forward, and `fix` is the limit of Kleene
//! iteration from the zero element, computed lazily per query.

mod fixpoint;

use std::fmt;
use std::sync::{Arc, Mutex};

pub use fixpoint::{fixpoint, kleene_iterates, zero_of, FixConfig};

use crate::interval::IntervalSet;
use crate::measure::{Measure, MeasureError, QuadratureConfig};
use crate::syntax::{
    free_vars, typecheck_with, Name, Primitive, PrimitiveTable, Term, TermKind, Type, TypeError,
    TypingContext,
};

/// The semantics of a function type: a closure on semantic values.
#[derive(Clone)]
pub struct SemFunc {
    pub domain: Type,
    pub codomain: Type,
    apply: Arc<dyn Fn(SemValue) -> Result<SemValue, MeasureError> + Send + Sync>,
}

impl SemFunc {
    pub fn new(
        domain: Type,
        codomain: Type,
        apply: impl Fn(SemValue) -> Result<SemValue, MeasureError> + Send + Sync + 'static,
    ) -> SemFunc {
        SemFunc {
            domain,
            codomain,
            apply: Arc::new(apply),
        }
    }

    pub fn apply(&self, arg: SemValue) -> Result<SemValue, MeasureError> {
        (self.apply)(arg)
    }
}

/// A denotation: a measure at `real`, a function at arrow types.
#[derive(Clone)]
pub enum SemValue {
    Meas(Measure),
    Func(SemFunc),
}

impl SemValue {
    pub fn ty(&self) -> Type {
        match self {
            SemValue::Meas(_) => Type::Real,
            SemValue::Func(f) => Type::arrow(f.domain.clone(), f.codomain.clone()),
        }
    }

    pub fn measure(&self) -> Option<&Measure> {
        match self {
            SemValue::Meas(m) => Some(m),
            SemValue::Func(_) => None,
        }
    }

    fn into_measure(self) -> Result<Measure, MeasureError> {
        match self {
            SemValue::Meas(m) => Ok(m),
            SemValue::Func(f) => Err(MeasureError::Unsupported(format!(
                "expected a ground value, found a function of type {}",
                Type::arrow(f.domain, f.codomain)
            ))),
        }
    }

    /// Applies a function value to arguments in turn.
    pub fn apply_all(&self, args: &[SemValue]) -> Result<SemValue, MeasureError> {
        let mut cur = self.clone();
        for a in args {
            cur = match cur {
                SemValue::Func(f) => f.apply(a.clone())?,
                SemValue::Meas(_) => {
                    return Err(MeasureError::Unsupported("applied a ground value".into()))
                }
            };
        }
        Ok(cur)
    }
}

impl fmt::Debug for SemValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemValue::Meas(m) => write!(f, "Meas({m:?})"),
            SemValue::Func(func) => write!(f, "Func({} -> {})", func.domain, func.codomain),
        }
    }
}

/// Values of the free variables. Extending is cheap and never mutates.
#[derive(Clone, Default)]
pub struct Env(Option<Arc<EnvNode>>);

struct EnvNode {
    name: Name,
    value: SemValue,
    next: Env,
}

impl Env {
    pub fn new() -> Env {
        Env(None)
    }

    pub fn extend(&self, name: impl Into<Name>, value: SemValue) -> Env {
        Env(Some(Arc::new(EnvNode {
            name: name.into(),
            value,
            next: self.clone(),
        })))
    }

    pub fn lookup(&self, name: &str) -> Option<&SemValue> {
        let mut cur = self;
        while let Some(node) = &cur.0 {
            if node.name.as_ref() == name {
                return Some(&node.value);
            }
            cur = &node.next;
        }
        None
    }

    /// The typing context the environment realizes, innermost binding last.
    pub fn typing_context(&self) -> TypingContext {
        let mut entries = Vec::new();
        let mut cur = self;
        while let Some(node) = &cur.0 {
            entries.push((node.name.clone(), node.value.ty()));
            cur = &node.next;
        }
        entries.into_iter().rev().collect()
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DenotationError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// A term checked against the environment, with primitives resolved and
/// binders annotated with their full types.
enum Code {
    Var(Name),
    Abs(Name, Type, Type, Arc<Code>),
    App(Arc<Code>, Arc<Code>),
    Fix(Type, Arc<Code>),
    Num(f64),
    Prim(Primitive, Vec<Code>),
    Ifz(Arc<Code>, Arc<Code>, Arc<Code>),
    Sample,
    Let(Name, Arc<Code>, Arc<Code>, LetMode),
    /// A closed subterm, evaluated at most once per interpretation.
    Shared(Mutex<Option<SemValue>>, Arc<Code>),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum LetMode {
    /// The body ignores the variable: the integral is a scaling.
    Unused,
    /// The body uses the variable once, inside a tree of primitives: the
    /// integral is a pushforward.
    Linear,
    General,
}

/// The interpreter's fixed parameters.
#[derive(Clone)]
pub struct Interpreter {
    prims: Arc<PrimitiveTable>,
    pub quad: QuadratureConfig,
    pub fix: FixConfig,
}

impl Default for Interpreter {
    fn default() -> Interpreter {
        Interpreter::new(PrimitiveTable::standard().clone())
    }
}

impl Interpreter {
    pub fn new(prims: PrimitiveTable) -> Interpreter {
        Interpreter {
            prims: Arc::new(prims),
            quad: QuadratureConfig::default(),
            fix: FixConfig::default(),
        }
    }

    pub fn with_quadrature(mut self, quad: QuadratureConfig) -> Interpreter {
        self.quad = quad;
        self
    }

    pub fn with_fix(mut self, fix: FixConfig) -> Interpreter {
        self.fix = fix;
        self
    }

    pub fn prims(&self) -> &PrimitiveTable {
        &self.prims
    }

    /// `⟦t⟧env`. The term is typechecked against the types of `env` first.
    pub fn interpret(&self, t: &Term, env: &Env) -> Result<SemValue, DenotationError> {
        let ctx = env.typing_context();
        typecheck_with(&self.prims, &ctx, t)?;
        let (code, _) = self.compile(t, &ctx);
        Ok(self.eval(&code, env)?)
    }

    /// The measure denoted by a closed term of type `real`.
    pub fn denote(&self, t: &Term) -> Result<Measure, DenotationError> {
        let ty = typecheck_with(&self.prims, &TypingContext::new(), t)?;
        if !ty.is_real() {
            return Err(DenotationError::Type(TypeError {
                message: format!("expected a closed program of type real, found {ty}"),
                term: t.clone(),
            }));
        }
        match self.interpret(t, &Env::new())? {
            SemValue::Meas(m) => Ok(m),
            SemValue::Func(_) => unreachable!("typechecked at real"),
        }
    }

    // Only called on well-typed terms.
    fn compile(&self, t: &Term, ctx: &TypingContext) -> (Code, Type) {
        let computes = matches!(
            t.kind(),
            TermKind::App(..) | TermKind::Fix(_) | TermKind::Prim(..) | TermKind::Ifz(..) | TermKind::Let(..)
        );
        let (code, ty) = self.compile_node(t, ctx);
        if computes && free_vars(t).is_empty() {
            return (Code::Shared(Mutex::new(None), Arc::new(code)), ty);
        }
        (code, ty)
    }

    fn compile_node(&self, t: &Term, ctx: &TypingContext) -> (Code, Type) {
        match t.kind() {
            TermKind::Var(x) => (
                Code::Var(x.clone()),
                ctx.lookup(x).cloned().expect("typechecked"),
            ),
            TermKind::Abs(x, ty, body) => {
                let (b, cod) = self.compile(body, &ctx.extended(x.clone(), ty.clone()));
                let full = Type::arrow(ty.clone(), cod.clone());
                (Code::Abs(x.clone(), ty.clone(), cod, Arc::new(b)), full)
            }
            TermKind::App(f, a) => {
                let (fc, fty) = self.compile(f, ctx);
                let (ac, _) = self.compile(a, ctx);
                let Type::Arrow(_, cod) = fty else {
                    unreachable!("typechecked")
                };
                (Code::App(Arc::new(fc), Arc::new(ac)), *cod)
            }
            TermKind::Fix(m) => {
                let (mc, mty) = self.compile(m, ctx);
                let Type::Arrow(a, _) = mty else {
                    unreachable!("typechecked")
                };
                (Code::Fix((*a).clone(), Arc::new(mc)), *a)
            }
            TermKind::Numeral(r) => (Code::Num(*r), Type::Real),
            TermKind::Prim(op, args) => {
                let p = self.prims.resolve(op).expect("typechecked");
                let args = args.iter().map(|a| self.compile(a, ctx).0).collect();
                (Code::Prim(p, args), Type::Real)
            }
            TermKind::Ifz(c, m, n) => (
                Code::Ifz(
                    Arc::new(self.compile(c, ctx).0),
                    Arc::new(self.compile(m, ctx).0),
                    Arc::new(self.compile(n, ctx).0),
                ),
                Type::Real,
            ),
            TermKind::Sample => (Code::Sample, Type::Real),
            TermKind::Let(x, m, n) => {
                let mode = if !free_vars(n).contains(x) {
                    LetMode::Unused
                } else if prim_tree_uses(n, x) == Some(1) {
                    LetMode::Linear
                } else {
                    LetMode::General
                };
                let bound = Arc::new(self.compile(m, ctx).0);
                let body = Arc::new(self.compile(n, &ctx.extended(x.clone(), Type::Real)).0);
                (Code::Let(x.clone(), bound, body, mode), Type::Real)
            }
        }
    }

    fn eval(&self, code: &Code, env: &Env) -> Result<SemValue, MeasureError> {
        Ok(match code {
            Code::Var(x) => env
                .lookup(x)
                .cloned()
                .ok_or_else(|| MeasureError::Unsupported(format!("unbound variable {x}")))?,
            Code::Num(r) => SemValue::Meas(Measure::dirac(*r)),
            Code::Sample => SemValue::Meas(Measure::uniform01()),
            Code::Abs(x, dom, cod, body) => {
                let (me, x, body, env) = (self.clone(), x.clone(), body.clone(), env.clone());
                SemValue::Func(SemFunc::new(dom.clone(), cod.clone(), move |v| {
                    me.eval(&body, &env.extend(x.clone(), v))
                }))
            }
            Code::App(f, a) => {
                let arg = self.eval(a, env)?;
                match self.eval(f, env)? {
                    SemValue::Func(f) => f.apply(arg)?,
                    SemValue::Meas(_) => {
                        return Err(MeasureError::Unsupported("applied a ground value".into()))
                    }
                }
            }
            Code::Fix(ty, m) => {
                let f = self.eval(m, env)?;
                fixpoint(&f, ty, &self.fix, &self.quad)?
            }
            Code::Prim(p, args) => {
                let ms = args
                    .iter()
                    .map(|a| self.eval(a, env)?.into_measure())
                    .collect::<Result<Vec<_>, _>>()?;
                SemValue::Meas(Measure::pushforward(p, ms)?)
            }
            Code::Ifz(c, m, n) => {
                let scrut = self.eval(c, env)?.into_measure()?;
                let zero = IntervalSet::point(0.0);
                let at_zero = scrut.mass(&zero, &self.quad)?;
                let elsewhere = scrut.mass(&zero.complement(), &self.quad)?;
                let mut coeffs = Vec::new();
                let mut parts = Vec::new();
                for (c, branch) in [(at_zero, m), (elsewhere, n)] {
                    if c > 0.0 {
                        coeffs.push(c);
                        parts.push(self.eval(branch, env)?.into_measure()?);
                    }
                }
                SemValue::Meas(Measure::mix(&coeffs, &parts))
            }
            Code::Shared(cell, inner) => {
                if let Some(v) = cell.lock().unwrap().as_ref() {
                    return Ok(v.clone());
                }
                let v = self.eval(inner, env)?;
                cell.lock().unwrap().get_or_insert(v).clone()
            }
            Code::Let(_, m, n, LetMode::Unused) => {
                let weight = self.eval(m, env)?.into_measure()?.total_mass(&self.quad)?;
                let body = if weight > 0.0 { self.eval(n, env)?.into_measure()? } else { Measure::zero() };
                SemValue::Meas(body.scale(weight))
            }
            Code::Let(x, m, n, LetMode::Linear) => {
                let bound = self.eval(m, env)?;
                self.eval(n, &env.extend(x.clone(), bound))?
            }
            Code::Let(x, m, n, LetMode::General) => {
                let bound = self.eval(m, env)?.into_measure()?;
                let (me, x, n, env) = (self.clone(), x.clone(), n.clone(), env.clone());
                SemValue::Meas(let_bind(&bound, move |r| {
                    me.eval(&n, &env.extend(x.clone(), SemValue::Meas(Measure::dirac(r))))?
                        .into_measure()
                })?)
            }
        })
    }
}

/// Occurrences of `x` in `t` if `t` is built from primitives, numerals,
/// variables and `sample` only.
fn prim_tree_uses(t: &Term, x: &Name) -> Option<usize> {
    match t.kind() {
        TermKind::Var(y) => Some((y == x) as usize),
        TermKind::Numeral(_) | TermKind::Sample => Some(0),
        TermKind::Prim(_, args) => args.iter().map(|a| prim_tree_uses(a, x)).sum(),
        _ => None,
    }
}

/// `U ↦ ∫ body(r)(U) bound(dr)`: the meaning of a ground `let`.
pub fn let_bind(
    bound: &Measure,
    body: impl Fn(f64) -> Result<Measure, MeasureError> + Send + Sync + 'static,
) -> Result<Measure, MeasureError> {
    Measure::bind(bound, body)
}

/// `⟦t⟧env` with the standard primitives and default tolerances.
pub fn interpret(t: &Term, env: &Env) -> Result<SemValue, DenotationError> {
    Interpreter::default().interpret(t, env)
}
