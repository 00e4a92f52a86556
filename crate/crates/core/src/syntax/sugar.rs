//! Derived forms: distributions, conditioning, branching on a set, the
//! higher-type `let`, and the Monte-Carlo estimate combinator.
//!
//! Each combinator is a closed core term; a macro call with arguments is the
//! combinator applied to them. `if[U]` and the higher-type `let` are not
//! combinators: their expansion depends on the type of the branches.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use super::{
    fresh_name, free_vars, typecheck_with, Name, PrimOp, PrimitiveTable, Term, TermKind, Type,
    TypeError, TypingContext,
};
use crate::interval::IntervalSet;

fn v(x: &str) -> Term {
    Term::var(x)
}

/// `λp. let x = sample in x <= p`
pub fn bernoulli() -> Term {
    Term::abs(
        "p",
        Type::Real,
        Term::let_in("x", Term::sample(), Term::prim("<=", vec![v("x"), v("p")])),
    )
}

/// Rate-1 exponential by inversion: `let x = sample in -log(x)`.
pub fn exponential() -> Term {
    Term::let_in(
        "x",
        Term::sample(),
        Term::prim("neg", vec![Term::prim("log", vec![v("x")])]),
    )
}

/// Standard normal by Box-Muller:
/// `let x = sample in let y = sample in sqrt(-2 * log(x)) * cos(2π * y)`.
pub fn normal() -> Term {
    let radius = Term::prim(
        "sqrt",
        vec![Term::prim("*", vec![Term::num(-2.0), Term::prim("log", vec![v("x")])])],
    );
    let angle = Term::prim("cos", vec![Term::prim("*", vec![Term::num(2.0 * PI), v("y")])]);
    Term::let_in(
        "x",
        Term::sample(),
        Term::let_in("y", Term::sample(), Term::prim("*", vec![radius, angle])),
    )
}

/// `λmu. λsigma. let y = normal in sigma * y + mu`
pub fn gaussian() -> Term {
    Term::abs(
        "mu",
        Type::Real,
        Term::abs(
            "sigma",
            Type::Real,
            Term::let_in(
                "y",
                normal(),
                Term::prim("+", vec![Term::prim("*", vec![v("sigma"), v("y")]), v("mu")]),
            ),
        ),
    )
}

/// Conditioning by rejection:
/// `λm. fix (λy. let x = m in if x ∈ U then x else y)`.
pub fn observe(u: IntervalSet) -> Term {
    let branch = if_real(v("x"), u, v("x"), v("y"));
    Term::abs(
        "m",
        Type::Real,
        Term::fix(Term::abs("y", Type::Real, Term::let_in("x", v("m"), branch))),
    )
}

/// The `n`-th Monte-Carlo estimate of an expectation:
/// `λf. λm. (f m + ... + f m) / n`. Each `f m` is an independent copy under
/// call-by-name.
pub fn expectation(n: usize) -> Term {
    assert!(n >= 1, "expectation needs at least one sample");
    let fm = || Term::app(v("f"), v("m"));
    let sum = (1..n).fold(fm(), |acc, _| Term::prim("+", vec![acc, fm()]));
    Term::abs(
        "f",
        Type::arrow(Type::Real, Type::Real),
        Term::abs("m", Type::Real, Term::prim("/", vec![sum, Term::num(n as f64)])),
    )
}

/// Ground-type branching on membership: `ifz chi_U(l) then n else m`.
/// The branches swap because `ifz` tests for zero.
pub fn if_real(l: Term, u: IntervalSet, m: Term, n: Term) -> Term {
    Term::ifz(Term::chi(u, l), n, m)
}

fn binder_names(count: usize, avoid: &mut BTreeSet<Name>) -> Vec<Name> {
    (0..count)
        .map(|_| {
            let z = fresh_name("z", avoid);
            avoid.insert(z.clone());
            z
        })
        .collect()
}

/// `if l ∈ U then m else n` at any type `B1 -> ... -> Bk -> real`:
/// `λz1..zk. ifz chi_U(l) then n z1..zk else m z1..zk`.
pub fn if_in(
    prims: &PrimitiveTable,
    ctx: &TypingContext,
    l: Term,
    u: IntervalSet,
    m: Term,
    n: Term,
) -> Result<Term, TypeError> {
    let ty = typecheck_with(prims, ctx, &m)?;
    let args: Vec<Type> = ty.arguments().into_iter().cloned().collect();
    if args.is_empty() {
        return Ok(if_real(l, u, m, n));
    }
    let mut avoid = free_vars(&l);
    avoid.extend(free_vars(&m));
    avoid.extend(free_vars(&n));
    let zs = binder_names(args.len(), &mut avoid);
    let applied = |t: Term| Term::apps(t, zs.iter().map(|z| TermKind::Var(z.clone()).into()));
    let body = if_real(l, u, applied(m), applied(n));
    Ok(wrap_abs(&zs, &args, body))
}

/// `let x = m in n` with `n` at any type `B1 -> ... -> Bk -> real`:
/// `λz1..zk. let x = m in n z1..zk`. The bound variable stays at `real`.
pub fn ext_let(
    prims: &PrimitiveTable,
    ctx: &TypingContext,
    x: &str,
    m: Term,
    n: Term,
) -> Result<Term, TypeError> {
    let ty = typecheck_with(prims, &ctx.extended(x.into(), Type::Real), &n)?;
    let args: Vec<Type> = ty.arguments().into_iter().cloned().collect();
    if args.is_empty() {
        return Ok(Term::let_in(x, m, n));
    }
    let mut avoid = free_vars(&m);
    avoid.extend(free_vars(&n));
    avoid.insert(x.into());
    let zs = binder_names(args.len(), &mut avoid);
    let body = Term::let_in(
        x,
        m,
        Term::apps(n, zs.iter().map(|z| TermKind::Var(z.clone()).into())),
    );
    Ok(wrap_abs(&zs, &args, body))
}

fn wrap_abs(zs: &[Name], tys: &[Type], body: Term) -> Term {
    zs.iter()
        .zip(tys)
        .rev()
        .fold(body, |acc, (z, ty)| TermKind::Abs(z.clone(), ty.clone(), acc).into())
}

/// A term that may still contain macro calls.
#[derive(Clone, Debug, PartialEq)]
pub enum Surface {
    Var(Name),
    Abs(Name, Type, Box<Surface>),
    App(Box<Surface>, Box<Surface>),
    Fix(Box<Surface>),
    Numeral(f64),
    Prim(PrimOp, Vec<Surface>),
    Ifz(Box<Surface>, Box<Surface>, Box<Surface>),
    Sample,
    Let(Name, Box<Surface>, Box<Surface>),
    Macro(MacroCall),
    /// An already-expanded term.
    Core(Term),
}

/// `#name[set](args)`
#[derive(Clone, Debug, PartialEq)]
pub struct MacroCall {
    pub name: String,
    pub set: Option<IntervalSet>,
    pub args: Vec<Surface>,
}

impl From<Term> for Surface {
    fn from(t: Term) -> Surface {
        Surface::Core(t)
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SugarError {
    #[error("unknown macro #{0}")]
    UnknownMacro(String),
    #[error("macro #{name} takes {expected} arguments, given {found}")]
    ArityError {
        name: String,
        expected: String,
        found: usize,
    },
    #[error("macro #{0} needs a set argument: #{0}[U](...)")]
    MissingSet(String),
    #[error("macro #{name}: {message}")]
    BadArgument { name: String, message: String },
    #[error(transparent)]
    Type(#[from] TypeError),
}

/// Macro names understood by [`expand_sugar`].
pub const MACROS: &[&str] = &[
    "bernoulli",
    "exponential",
    "normal",
    "gaussian",
    "observe",
    "if",
    "let",
    "expectation_<n>",
];

/// Rewrites every macro call into core syntax. `ctx` types the free
/// variables; it is only consulted by `#if` and `#let`, whose expansion
/// depends on the type of their branches.
pub fn expand_sugar(ctx: &TypingContext, s: &Surface) -> Result<Term, SugarError> {
    expand_with(PrimitiveTable::standard(), ctx, s)
}

pub fn expand_with(
    prims: &PrimitiveTable,
    ctx: &TypingContext,
    s: &Surface,
) -> Result<Term, SugarError> {
    let go = |c: &TypingContext, s: &Surface| expand_with(prims, c, s);
    Ok(match s {
        Surface::Var(x) => TermKind::Var(x.clone()).into(),
        Surface::Abs(x, ty, body) => {
            let inner = ctx.extended(x.clone(), ty.clone());
            TermKind::Abs(x.clone(), ty.clone(), go(&inner, body)?).into()
        }
        Surface::App(f, a) => Term::app(go(ctx, f)?, go(ctx, a)?),
        Surface::Fix(m) => Term::fix(go(ctx, m)?),
        Surface::Numeral(r) => Term::num(*r),
        Surface::Prim(op, args) => TermKind::Prim(
            op.clone(),
            args.iter().map(|a| go(ctx, a)).collect::<Result<_, _>>()?,
        )
        .into(),
        Surface::Ifz(c, m, n) => Term::ifz(go(ctx, c)?, go(ctx, m)?, go(ctx, n)?),
        Surface::Sample => Term::sample(),
        Surface::Let(x, m, n) => {
            let inner = ctx.extended(x.clone(), Type::Real);
            TermKind::Let(x.clone(), go(ctx, m)?, go(&inner, n)?).into()
        }
        Surface::Core(t) => t.clone(),
        Surface::Macro(call) => {
            let bound = match (call.name.as_str(), call.args.first()) {
                ("let", Some(Surface::Var(x))) => Some(x.clone()),
                _ => None,
            };
            let args = call
                .args
                .iter()
                .enumerate()
                .map(|(i, a)| match &bound {
                    Some(x) if i == 2 => go(&ctx.extended(x.clone(), Type::Real), a),
                    _ => go(ctx, a),
                })
                .collect::<Result<Vec<_>, _>>()?;
            apply_macro(prims, ctx, &call.name, call.set.clone(), args)?
        }
    })
}

/// Expands one macro call whose arguments are already core terms. For
/// `#let` the first argument must be a variable and the third is typed with
/// that variable bound at `real`.
pub fn apply_macro(
    prims: &PrimitiveTable,
    ctx: &TypingContext,
    name: &str,
    set: Option<IntervalSet>,
    args: Vec<Term>,
) -> Result<Term, SugarError> {
    let found = args.len();
    let arity_error = |expected: &str| SugarError::ArityError {
        name: name.to_string(),
        expected: expected.to_string(),
        found,
    };
    if set.is_some() && !matches!(name, "observe" | "if") {
        return Err(SugarError::BadArgument {
            name: name.into(),
            message: "does not take a set argument".into(),
        });
    }
    let needs_set = || set.clone().ok_or_else(|| SugarError::MissingSet(name.into()));

    // Combinators are applied to however many arguments are given, up to
    // their arity.
    let combinator = match name {
        "bernoulli" => Some((bernoulli(), 1)),
        "exponential" => Some((exponential(), 0)),
        "normal" => Some((normal(), 0)),
        "gaussian" => Some((gaussian(), 2)),
        "observe" => Some((observe(needs_set()?), 1)),
        _ => match name.strip_prefix("expectation_").map(str::parse::<usize>) {
            Some(Ok(n)) if n >= 1 => Some((expectation(n), 2)),
            Some(_) => {
                return Err(SugarError::BadArgument {
                    name: name.into(),
                    message: "expects a positive sample count, e.g. #expectation_3".into(),
                })
            }
            None => None,
        },
    };
    if let Some((term, arity)) = combinator {
        if found > arity {
            return Err(arity_error(&format!("at most {arity}")));
        }
        return Ok(Term::apps(term, args));
    }

    match name {
        "if" => {
            let u = needs_set()?;
            let Ok([l, m, n]) = <[Term; 3]>::try_from(args) else {
                return Err(arity_error("3"));
            };
            Ok(if_in(prims, ctx, l, u, m, n)?)
        }
        "let" => {
            let Ok([x, m, n]) = <[Term; 3]>::try_from(args) else {
                return Err(arity_error("3"));
            };
            let TermKind::Var(x) = x.kind() else {
                return Err(SugarError::BadArgument {
                    name: name.into(),
                    message: "first argument must be a variable".into(),
                });
            };
            Ok(ext_let(prims, ctx, x, m, n)?)
        }
        _ => Err(SugarError::UnknownMacro(name.into())),
    }
}
