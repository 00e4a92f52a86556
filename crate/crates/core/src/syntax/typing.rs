use std::fmt;

use super::{Name, PrimitiveTable, Term, TermKind, Type};

/// Ordered variable typings. Extending with a name already present shadows
/// the older entry, so lookups always see the innermost binder.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TypingContext {
    entries: Vec<(Name, Type)>,
}

impl TypingContext {
    pub fn new() -> TypingContext {
        TypingContext::default()
    }

    pub fn extended(&self, name: Name, ty: Type) -> TypingContext {
        let mut c = self.clone();
        c.push(name, ty);
        c
    }

    pub fn push(&mut self, name: Name, ty: Type) {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, ty));
    }

    pub fn lookup(&self, name: &str) -> Option<&Type> {
        self.entries
            .iter()
            .rev()
            .find(|(n, _)| n.as_ref() == name)
            .map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Type)> {
        self.entries.iter().map(|(n, t)| (n, t))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FromIterator<(Name, Type)> for TypingContext {
    fn from_iter<I: IntoIterator<Item = (Name, Type)>>(iter: I) -> TypingContext {
        let mut c = TypingContext::new();
        for (n, t) in iter {
            c.push(n, t);
        }
        c
    }
}

/// No typing rule applies to `term`.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub struct TypeError {
    pub message: String,
    /// The smallest subterm at which the failure was detected.
    pub term: Term,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "type error: {} in `{}`", self.message, self.term)
    }
}

fn err<T>(term: &Term, message: impl Into<String>) -> Result<T, TypeError> {
    Err(TypeError {
        message: message.into(),
        term: term.clone(),
    })
}

/// Types `t` against the standard primitive table.
pub fn typecheck(ctx: &TypingContext, t: &Term) -> Result<Type, TypeError> {
    typecheck_with(PrimitiveTable::standard(), ctx, t)
}

pub fn typecheck_with(
    prims: &PrimitiveTable,
    ctx: &TypingContext,
    t: &Term,
) -> Result<Type, TypeError> {
    let expect_real = |ctx: &TypingContext, sub: &Term, what: &str| -> Result<(), TypeError> {
        match typecheck_with(prims, ctx, sub)? {
            Type::Real => Ok(()),
            other => err(sub, format!("{what} must have type real, found {other}")),
        }
    };
    match t.kind() {
        TermKind::Var(x) => match ctx.lookup(x) {
            Some(ty) => Ok(ty.clone()),
            None => err(t, format!("unbound variable {x}")),
        },
        TermKind::Abs(x, ty, body) => {
            let inner = ctx.extended(x.clone(), ty.clone());
            let cod = typecheck_with(prims, &inner, body)?;
            Ok(Type::arrow(ty.clone(), cod))
        }
        TermKind::App(f, a) => match typecheck_with(prims, ctx, f)? {
            Type::Arrow(dom, cod) => {
                let at = typecheck_with(prims, ctx, a)?;
                if at == *dom {
                    Ok(*cod)
                } else {
                    err(a, format!("argument has type {at}, expected {dom}"))
                }
            }
            Type::Real => err(f, "applied term has type real, not a function type"),
        },
        TermKind::Fix(m) => match typecheck_with(prims, ctx, m)? {
            Type::Arrow(dom, cod) if dom == cod => Ok(*dom),
            other => err(m, format!("fix expects a term of type A -> A, found {other}")),
        },
        TermKind::Numeral(r) => {
            if r.is_finite() {
                Ok(Type::Real)
            } else {
                err(t, "numerals must be finite")
            }
        }
        TermKind::Prim(op, args) => {
            let arity = match prims.arity(op) {
                Some(n) => n,
                None => return err(t, format!("unknown primitive {op}")),
            };
            if arity != args.len() {
                return err(
                    t,
                    format!("primitive {op} takes {arity} arguments, given {}", args.len()),
                );
            }
            for a in args {
                expect_real(ctx, a, "primitive argument")?;
            }
            Ok(Type::Real)
        }
        TermKind::Ifz(c, m, n) => {
            expect_real(ctx, c, "ifz scrutinee")?;
            expect_real(ctx, m, "ifz branch")?;
            expect_real(ctx, n, "ifz branch")?;
            Ok(Type::Real)
        }
        TermKind::Sample => Ok(Type::Real),
        TermKind::Let(x, m, n) => {
            expect_real(ctx, m, "let-bound term")?;
            expect_real(&ctx.extended(x.clone(), Type::Real), n, "let body")?;
            Ok(Type::Real)
        }
    }
}
