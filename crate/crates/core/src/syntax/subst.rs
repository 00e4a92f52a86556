use std::collections::BTreeSet;

use super::{Name, Term, TermKind};

/// Free variables of `t`.
pub fn free_vars(t: &Term) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    collect_free(t, &mut Vec::new(), &mut out);
    out
}

pub fn is_closed(t: &Term) -> bool {
    free_vars(t).is_empty()
}

fn collect_free(t: &Term, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    match t.kind() {
        TermKind::Var(x) => {
            if !bound.contains(x) {
                out.insert(x.clone());
            }
        }
        TermKind::Numeral(_) | TermKind::Sample => {}
        TermKind::Abs(x, _, body) => {
            bound.push(x.clone());
            collect_free(body, bound, out);
            bound.pop();
        }
        TermKind::Let(x, m, body) => {
            collect_free(m, bound, out);
            bound.push(x.clone());
            collect_free(body, bound, out);
            bound.pop();
        }
        TermKind::App(f, a) => {
            collect_free(f, bound, out);
            collect_free(a, bound, out);
        }
        TermKind::Fix(m) => collect_free(m, bound, out),
        TermKind::Prim(_, args) => args.iter().for_each(|a| collect_free(a, bound, out)),
        TermKind::Ifz(c, m, n) => {
            collect_free(c, bound, out);
            collect_free(m, bound, out);
            collect_free(n, bound, out);
        }
    }
}

/// `base#k` for the smallest `k >= 1` not in `avoid`. An existing `#k`
/// suffix on `base` is dropped first, so renaming never stacks suffixes.
pub fn fresh_name(base: &str, avoid: &BTreeSet<Name>) -> Name {
    let stem = base.split('#').next().unwrap_or(base);
    (1u64..)
        .map(|k| Name::from(format!("{stem}#{k}")))
        .find(|n| !avoid.contains(n))
        .expect("an unused suffix exists")
}

/// Capture-avoiding substitution `t{s/x}`.
///
/// A binder is renamed only when it would capture a free variable of `s`
/// and `x` actually occurs free beneath it. Subterms without free `x` are
/// shared with the input.
pub fn substitute(t: &Term, x: &str, s: &Term) -> Term {
    let fv_s = free_vars(s);
    subst(t, x, s, &fv_s).unwrap_or_else(|| t.clone())
}

fn subst(t: &Term, x: &str, s: &Term, fv_s: &BTreeSet<Name>) -> Option<Term> {
    match t.kind() {
        TermKind::Var(y) => (y.as_ref() == x).then(|| s.clone()),
        TermKind::Numeral(_) | TermKind::Sample => None,
        TermKind::Abs(y, ty, body) => {
            let (y2, body2) = under_binder(y, body, x, s, fv_s)?;
            Some(TermKind::Abs(y2, ty.clone(), body2).into())
        }
        TermKind::Let(y, m, body) => {
            let m2 = subst(m, x, s, fv_s);
            let b2 = under_binder(y, body, x, s, fv_s);
            if m2.is_none() && b2.is_none() {
                return None;
            }
            let (y2, body2) = b2.unwrap_or_else(|| (y.clone(), body.clone()));
            Some(TermKind::Let(y2, m2.unwrap_or_else(|| m.clone()), body2).into())
        }
        TermKind::App(f, a) => {
            let (f2, a2) = (subst(f, x, s, fv_s), subst(a, x, s, fv_s));
            if f2.is_none() && a2.is_none() {
                return None;
            }
            Some(Term::app(
                f2.unwrap_or_else(|| f.clone()),
                a2.unwrap_or_else(|| a.clone()),
            ))
        }
        TermKind::Fix(m) => subst(m, x, s, fv_s).map(Term::fix),
        TermKind::Prim(op, args) => {
            let new: Vec<Option<Term>> = args.iter().map(|a| subst(a, x, s, fv_s)).collect();
            if new.iter().all(Option::is_none) {
                return None;
            }
            let args = new
                .into_iter()
                .zip(args)
                .map(|(n, a)| n.unwrap_or_else(|| a.clone()))
                .collect();
            Some(TermKind::Prim(op.clone(), args).into())
        }
        TermKind::Ifz(c, m, n) => {
            let (c2, m2, n2) = (subst(c, x, s, fv_s), subst(m, x, s, fv_s), subst(n, x, s, fv_s));
            if c2.is_none() && m2.is_none() && n2.is_none() {
                return None;
            }
            Some(Term::ifz(
                c2.unwrap_or_else(|| c.clone()),
                m2.unwrap_or_else(|| m.clone()),
                n2.unwrap_or_else(|| n.clone()),
            ))
        }
    }
}

fn under_binder(
    y: &Name,
    body: &Term,
    x: &str,
    s: &Term,
    fv_s: &BTreeSet<Name>,
) -> Option<(Name, Term)> {
    if y.as_ref() == x {
        return None;
    }
    if fv_s.contains(y) {
        let fv_body = free_vars(body);
        if !fv_body.contains(x) {
            return None;
        }
        let mut avoid = fv_body;
        avoid.extend(fv_s.iter().cloned());
        avoid.insert(x.into());
        let y2 = fresh_name(y, &avoid);
        let renamed = substitute(body, y, &TermKind::Var(y2.clone()).into());
        let body2 = subst(&renamed, x, s, fv_s).unwrap_or(renamed);
        return Some((y2, body2));
    }
    subst(body, x, s, fv_s).map(|b| (y.clone(), b))
}

/// Equality up to renaming of bound variables.
pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    alpha(a, b, &mut Vec::new(), &mut Vec::new())
}

fn alpha(a: &Term, b: &Term, env_a: &mut Vec<Name>, env_b: &mut Vec<Name>) -> bool {
    fn with<R>(
        env_a: &mut Vec<Name>,
        env_b: &mut Vec<Name>,
        x: &Name,
        y: &Name,
        k: impl FnOnce(&mut Vec<Name>, &mut Vec<Name>) -> R,
    ) -> R {
        env_a.push(x.clone());
        env_b.push(y.clone());
        let r = k(env_a, env_b);
        env_a.pop();
        env_b.pop();
        r
    }
    match (a.kind(), b.kind()) {
        (TermKind::Var(x), TermKind::Var(y)) => {
            let ix = env_a.iter().rposition(|n| n == x);
            let iy = env_b.iter().rposition(|n| n == y);
            match (ix, iy) {
                (Some(i), Some(j)) => i == j,
                (None, None) => x == y,
                _ => false,
            }
        }
        (TermKind::Abs(x, tx, bx), TermKind::Abs(y, ty, by)) => {
            tx == ty && with(env_a, env_b, x, y, |ea, eb| alpha(bx, by, ea, eb))
        }
        (TermKind::Let(x, mx, bx), TermKind::Let(y, my, by)) => {
            alpha(mx, my, env_a, env_b) && with(env_a, env_b, x, y, |ea, eb| alpha(bx, by, ea, eb))
        }
        (TermKind::App(f, x), TermKind::App(g, y)) => {
            alpha(f, g, env_a, env_b) && alpha(x, y, env_a, env_b)
        }
        (TermKind::Fix(m), TermKind::Fix(n)) => alpha(m, n, env_a, env_b),
        (TermKind::Numeral(r), TermKind::Numeral(s)) => r.to_bits() == s.to_bits(),
        (TermKind::Sample, TermKind::Sample) => true,
        (TermKind::Prim(p, xs), TermKind::Prim(q, ys)) => {
            p == q
                && xs.len() == ys.len()
                && xs.iter().zip(ys).all(|(x, y)| alpha(x, y, env_a, env_b))
        }
        (TermKind::Ifz(c1, m1, n1), TermKind::Ifz(c2, m2, n2)) => {
            alpha(c1, c2, env_a, env_b) && alpha(m1, m2, env_a, env_b) && alpha(n1, n2, env_a, env_b)
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Type;

    fn v(x: &str) -> Term {
        Term::var(x)
    }

    #[test]
    fn direct_replacement() {
        let t = Term::prim("=", vec![v("x"), v("x")]);
        let r = substitute(&t, "x", &Term::num(3.0));
        assert_eq!(r, Term::prim("=", vec![Term::num(3.0), Term::num(3.0)]));
    }

    #[test]
    fn no_capture_no_renaming() {
        let t = Term::abs("x", Type::Real, Term::app(v("x"), v("y")));
        let r = substitute(&t, "y", &v("z"));
        assert_eq!(r, Term::abs("x", Type::Real, Term::app(v("x"), v("z"))));
    }

    #[test]
    fn capture_forces_renaming() {
        let t = Term::abs("y", Type::Real, v("x"));
        let r = substitute(&t, "x", &v("y"));
        match r.kind() {
            TermKind::Abs(y2, _, body) => {
                assert_eq!(y2.as_ref(), "y#1");
                assert_eq!(*body, v("y"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shadowing_stops_substitution() {
        let t = Term::let_in("x", v("x"), v("x"));
        let r = substitute(&t, "x", &Term::num(1.0));
        assert_eq!(r, Term::let_in("x", Term::num(1.0), v("x")));
    }

    #[test]
    fn renaming_respects_inner_binders() {
        // (λy. λy#1. x y y#1){y/x}: the renamed outer binder must dodge y#1.
        let t = Term::abs(
            "y",
            Type::Real,
            Term::abs("y#1", Type::Real, Term::apps(v("x"), [v("y"), v("y#1")])),
        );
        let r = substitute(&t, "x", &v("y"));
        let expected = Term::abs(
            "a",
            Type::Real,
            Term::abs("b", Type::Real, Term::apps(v("y"), [v("a"), v("b")])),
        );
        assert!(alpha_eq(&r, &expected), "{r:?}");
    }

    #[test]
    fn alpha_equivalence() {
        let a = Term::abs("x", Type::Real, v("x"));
        let b = Term::abs("y", Type::Real, v("y"));
        assert!(alpha_eq(&a, &b));
        let c = Term::abs("y", Type::Real, v("x"));
        assert!(!alpha_eq(&a, &c));
        assert!(!alpha_eq(&v("x"), &v("y")));
    }

    #[test]
    fn fresh_names_do_not_stack() {
        let avoid: BTreeSet<Name> = ["y#1".into()].into_iter().collect();
        assert_eq!(fresh_name("y#1", &avoid).as_ref(), "y#2");
    }
}
