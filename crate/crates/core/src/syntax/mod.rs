//! Abstract syntax of the object language: types, terms, primitives, the
//! typing judgment, substitution, and the macro layer.

mod prim;
mod subst;
pub mod sugar;
mod typing;

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

pub use prim::{PrimOp, Primitive, PrimitiveTable, SectionFn, MAX_REAL};
pub use subst::{alpha_eq, free_vars, fresh_name, is_closed, substitute};
pub use typing::{typecheck, typecheck_with, TypeError, TypingContext};

use crate::interval::IntervalSet;

/// Variable names. Cheap to clone.
pub type Name = Arc<str>;

/// `real | A -> B`
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Real,
    Arrow(Box<Type>, Box<Type>),
}

impl Type {
    pub fn arrow(domain: Type, codomain: Type) -> Type {
        Type::Arrow(Box::new(domain), Box::new(codomain))
    }

    /// `A1 -> ... -> An -> real` split into `[A1, ..., An]`. Every type ends
    /// in `real`, so this is total.
    pub fn arguments(&self) -> Vec<&Type> {
        let mut out = Vec::new();
        let mut t = self;
        while let Type::Arrow(a, b) = t {
            out.push(a.as_ref());
            t = b;
        }
        out
    }

    pub fn is_real(&self) -> bool {
        matches!(self, Type::Real)
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Real => f.write_str("real"),
            Type::Arrow(a, b) if a.is_real() => write!(f, "real -> {b}"),
            Type::Arrow(a, b) => write!(f, "({a}) -> {b}"),
        }
    }
}

/// A term. Clones share structure.
#[derive(Clone, PartialEq)]
pub struct Term(Arc<TermKind>);

#[derive(Debug, PartialEq)]
pub enum TermKind {
    Var(Name),
    Abs(Name, Type, Term),
    App(Term, Term),
    Fix(Term),
    Numeral(f64),
    Prim(PrimOp, Vec<Term>),
    Ifz(Term, Term, Term),
    Sample,
    Let(Name, Term, Term),
}

impl Deref for Term {
    type Target = TermKind;

    fn deref(&self) -> &TermKind {
        &self.0
    }
}

impl From<TermKind> for Term {
    fn from(kind: TermKind) -> Term {
        Term(Arc::new(kind))
    }
}

impl Term {
    pub fn kind(&self) -> &TermKind {
        &self.0
    }

    pub fn var(name: &str) -> Term {
        TermKind::Var(name.into()).into()
    }

    pub fn abs(name: &str, ty: Type, body: Term) -> Term {
        TermKind::Abs(name.into(), ty, body).into()
    }

    pub fn app(fun: Term, arg: Term) -> Term {
        TermKind::App(fun, arg).into()
    }

    /// `f a1 ... an`
    pub fn apps(fun: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(fun, Term::app)
    }

    pub fn fix(body: Term) -> Term {
        TermKind::Fix(body).into()
    }

    /// A numeral. Non-finite values are clamped into the representable
    /// range (NaN becomes 0) so that the finiteness invariant holds.
    pub fn num(r: f64) -> Term {
        TermKind::Numeral(sanitize(r)).into()
    }

    pub fn prim(name: &str, args: Vec<Term>) -> Term {
        TermKind::Prim(PrimOp::Named(name.into()), args).into()
    }

    pub fn chi(set: IntervalSet, arg: Term) -> Term {
        TermKind::Prim(PrimOp::Chi(set), vec![arg]).into()
    }

    pub fn ifz(scrutinee: Term, then: Term, otherwise: Term) -> Term {
        TermKind::Ifz(scrutinee, then, otherwise).into()
    }

    pub fn sample() -> Term {
        TermKind::Sample.into()
    }

    pub fn let_in(name: &str, bound: Term, body: Term) -> Term {
        TermKind::Let(name.into(), bound, body).into()
    }

    pub fn as_numeral(&self) -> Option<f64> {
        match self.kind() {
            TermKind::Numeral(r) => Some(*r),
            _ => None,
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + match self.kind() {
            TermKind::Var(_) | TermKind::Numeral(_) | TermKind::Sample => 0,
            TermKind::Abs(_, _, b) | TermKind::Fix(b) => b.size(),
            TermKind::App(f, a) => f.size() + a.size(),
            TermKind::Prim(_, args) => args.iter().map(Term::size).sum(),
            TermKind::Ifz(c, m, n) => c.size() + m.size() + n.size(),
            TermKind::Let(_, m, n) => m.size() + n.size(),
        }
    }

    /// Does any `fix` occur in the term?
    pub fn contains_fix(&self) -> bool {
        match self.kind() {
            TermKind::Fix(_) => true,
            TermKind::Var(_) | TermKind::Numeral(_) | TermKind::Sample => false,
            TermKind::Abs(_, _, b) => b.contains_fix(),
            TermKind::App(f, a) => f.contains_fix() || a.contains_fix(),
            TermKind::Prim(_, args) => args.iter().any(Term::contains_fix),
            TermKind::Ifz(c, m, n) => c.contains_fix() || m.contains_fix() || n.contains_fix(),
            TermKind::Let(_, m, n) => m.contains_fix() || n.contains_fix(),
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self.kind(), f)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::parser::pretty(self))
    }
}

/// Clamps a primitive result into the finite reals: NaN maps to 0 and the
/// infinities to the largest finite magnitude. `-0` becomes `0`.
pub fn sanitize(r: f64) -> f64 {
    if r.is_nan() || r == 0.0 {
        0.0
    } else {
        r.clamp(-MAX_REAL, MAX_REAL)
    }
}

/// Shortest round-trip rendering of a float. Plain decimal in the usual
/// range, exponent notation for very large or very small magnitudes.
pub fn fmt_real(r: f64) -> String {
    let a = r.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_rendering_round_trips() {
        for r in [5.0, 0.1, -3.25, 1e-7, 1e300, -2.5e-300, MAX_REAL, 123456789.0, 0.0] {
            let s = fmt_real(r);
            assert_eq!(s.parse::<f64>().unwrap(), r, "{s}");
        }
        assert_eq!(fmt_real(5.0), "5");
    }

    #[test]
    fn numerals_are_finite() {
        assert_eq!(Term::num(f64::INFINITY).as_numeral(), Some(MAX_REAL));
        assert_eq!(Term::num(f64::NAN).as_numeral(), Some(0.0));
    }

    #[test]
    fn type_display_is_right_associative() {
        let t = Type::arrow(Type::arrow(Type::Real, Type::Real), Type::arrow(Type::Real, Type::Real));
        assert_eq!(t.to_string(), "(real -> real) -> real -> real");
        assert_eq!(t.arguments().len(), 2);
    }
}
