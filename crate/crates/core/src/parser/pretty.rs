use crate::syntax::{fmt_real, PrimOp, Term, TermKind};

// Binding strength of each syntactic level; a term is parenthesized when it
// lands in a slot demanding a higher level than its own.
const EXPR: u8 = 0;
const CMP: u8 = 1;
const ADD: u8 = 2;
const MUL: u8 = 3;
const UNARY: u8 = 4;
const APP: u8 = 5;
const ATOM: u8 = 6;

/// Renders `t` in the concrete syntax with as few parentheses as the
/// grammar allows. Parsing the result gives back `t` up to renaming.
pub fn pretty(t: &Term) -> String {
    let mut out = String::new();
    write_term(t, EXPR, &mut out);
    out
}

fn infix(op: &PrimOp, arity: usize) -> Option<(u8, &'static str)> {
    let PrimOp::Named(name) = op else {
        return None;
    };
    if arity != 2 {
        return None;
    }
    Some(match name.as_ref() {
        "=" => (CMP, "="),
        "<" => (CMP, "<"),
        "<=" => (CMP, "<="),
        "+" => (ADD, "+"),
        "-" => (ADD, "-"),
        "*" => (MUL, "*"),
        "/" => (MUL, "/"),
        _ => return None,
    })
}

fn level(t: &Term) -> u8 {
    match t.kind() {
        TermKind::Let(..) | TermKind::Abs(..) | TermKind::Ifz(..) => EXPR,
        TermKind::Prim(op, args) => infix(op, args.len()).map_or(ATOM, |(l, _)| l),
        TermKind::Numeral(r) if *r < 0.0 => UNARY,
        TermKind::App(..) | TermKind::Fix(_) => APP,
        TermKind::Var(_) | TermKind::Numeral(_) | TermKind::Sample => ATOM,
    }
}

fn write_term(t: &Term, slot: u8, out: &mut String) {
    let parens = level(t) < slot;
    if parens {
        out.push('(');
    }
    match t.kind() {
        TermKind::Var(x) => out.push_str(x),
        TermKind::Numeral(r) => out.push_str(&fmt_real(*r)),
        TermKind::Sample => out.push_str("sample"),
        TermKind::Abs(x, ty, body) => {
            out.push_str(&format!("fun {x} : {ty} -> "));
            write_term(body, EXPR, out);
        }
        TermKind::Let(x, m, n) => {
            out.push_str(&format!("let {x} = "));
            write_term(m, EXPR, out);
            out.push_str(" in ");
            write_term(n, EXPR, out);
        }
        TermKind::Ifz(c, m, n) => {
            out.push_str("ifz ");
            write_term(c, EXPR, out);
            out.push_str(" then ");
            write_term(m, EXPR, out);
            out.push_str(" else ");
            write_term(n, EXPR, out);
        }
        TermKind::App(f, a) => {
            write_term(f, APP, out);
            out.push(' ');
            write_term(a, ATOM, out);
        }
        TermKind::Fix(m) => {
            out.push_str("fix ");
            write_term(m, ATOM, out);
        }
        TermKind::Prim(op, args) => match infix(op, args.len()) {
            Some((l, sym)) => {
                // Comparisons do not associate, so both sides sit one level
                // up; the arithmetic operators associate to the left.
                let (left, right) = if l == CMP { (ADD, ADD) } else { (l, l + 1) };
                write_term(&args[0], left, out);
                out.push_str(&format!(" {sym} "));
                write_term(&args[1], right, out);
            }
            None => {
                match op {
                    PrimOp::Named(n) => out.push_str(n),
                    PrimOp::Chi(u) => {
                        out.push_str("chi[");
                        out.push_str(&u.display_with(" ∪ "));
                        out.push(']');
                    }
                }
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_term(a, EXPR, out);
                }
                out.push(')');
            }
        },
    }
    if parens {
        out.push(')');
    }
}
