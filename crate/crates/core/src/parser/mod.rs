//! Concrete syntax.
//!
//! ```text
//! program ::= { def NAME = expr ; } expr [;]
//! expr    ::= let NAME = expr in expr
//!           | fun NAME : type -> expr
//!           | ifz expr then expr else expr
//!           | cmp
//! cmp     ::= add [ (= | < | <=) add ]
//! add     ::= mul { (+ | -) mul }
//! mul     ::= unary { (* | /) unary }
//! unary   ::= - NUMBER | - unary | app
//! app     ::= (fix atom | atom) { atom }
//! atom    ::= NAME | NUMBER | sample | ( expr )
//!           | PRIM ( expr, ... ) | chi[U] ( expr ) | #MACRO[U] [ ( expr, ... ) ]
//! type    ::= real | type -> type | ( type )
//! ```
//!
//! `-- ...` is a line comment. Named primitives (`log`, `min`, ...) are
//! reserved words and must be called with parentheses.

mod lexer;
mod pretty;

use std::collections::HashSet;
use std::fmt;

pub use pretty::pretty;

use crate::syntax::sugar::{apply_macro, SugarError};
use crate::syntax::{
    substitute, typecheck_with, Name, PrimOp, PrimitiveTable, Term, TermKind, Type, TypingContext,
};
use lexer::{tokenize, Pos, Tok};

/// A syntax error, located at the offending token.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    /// What the parser would have accepted here.
    pub expected: Vec<String>,
    pub found: String,
    pub message: Option<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at {}:{}: ", self.line, self.col)?;
        if let Some(m) = &self.message {
            return write!(f, "{m}");
        }
        match self.expected.as_slice() {
            [] => write!(f, "unexpected {}", self.found),
            [one] => write!(f, "expected {one}, found {}", self.found),
            many => write!(f, "expected one of {}, found {}", many.join(", "), self.found),
        }
    }
}

/// A parsed source file: top-level definitions followed by the main term.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceProgram {
    pub text: String,
    /// In source order; each may refer to the ones before it.
    pub definitions: Vec<(Name, Term)>,
    pub main: Term,
}

impl SourceProgram {
    /// The main term with every definition inlined.
    pub fn closed_main(&self) -> Term {
        self.definitions
            .iter()
            .rev()
            .fold(self.main.clone(), |t, (name, d)| substitute(&t, name, d))
    }

    pub fn definition(&self, name: &str) -> Option<&Term> {
        self.definitions
            .iter()
            .find(|(n, _)| n.as_ref() == name)
            .map(|(_, t)| t)
    }
}

/// Parses a whole program. Macros are expanded during parsing.
pub fn parse(text: &str) -> Result<SourceProgram, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        prims: PrimitiveTable::standard(),
        ctx: TypingContext::new(),
    };
    let mut definitions: Vec<(Name, Term)> = Vec::new();
    let mut seen = HashSet::new();
    while p.peek() == &Tok::Kw("def") {
        p.bump();
        let (name, pos) = p.ident()?;
        if !seen.insert(name.clone()) {
            return Err(p.error_at(pos, &[], format!("duplicate definition `{name}`")));
        }
        p.expect_sym("=")?;
        let body = p.expr()?;
        p.expect_sym(";")?;
        // Definitions are visible to later macros only when they typecheck;
        // genuine type errors are reported by the typechecker, not here.
        let closed = definitions
            .iter()
            .rev()
            .fold(body.clone(), |t, (n, d)| substitute(&t, n, d));
        if let Ok(ty) = typecheck_with(p.prims, &TypingContext::new(), &closed) {
            p.ctx.push(name.clone(), ty);
        }
        definitions.push((name, body));
    }
    let main = p.expr()?;
    if p.peek() == &Tok::Sym(";") {
        p.bump();
    }
    if p.peek() != &Tok::Eof {
        return Err(p.error(&["end of input"]));
    }
    Ok(SourceProgram {
        text: text.to_string(),
        definitions,
        main,
    })
}

/// Parses a single term (no definitions).
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let prog = parse(text)?;
    if !prog.definitions.is_empty() {
        return Err(ParseError {
            line: 1,
            col: 1,
            expected: vec!["expression".into()],
            found: "`def`".into(),
            message: None,
        });
    }
    Ok(prog.main)
}

/// Parses a type such as `(real -> real) -> real`.
pub fn parse_type(text: &str) -> Result<Type, ParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        at: 0,
        prims: PrimitiveTable::standard(),
        ctx: TypingContext::new(),
    };
    let ty = p.ty()?;
    if p.peek() != &Tok::Eof {
        return Err(p.error(&["`->`", "end of input"]));
    }
    Ok(ty)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    prims: &'static PrimitiveTable,
    /// Types of the variables in scope, for macros whose expansion depends
    /// on the type of their arguments.
    ctx: TypingContext,
}

const EXPR_START: &[&str] = &["expression"];

fn is_named_prim(prims: &PrimitiveTable, name: &str) -> bool {
    prims.get(name).is_some() && name.starts_with(|c: char| c.is_ascii_alphabetic())
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if t != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let pos = self.pos();
        ParseError {
            line: pos.line,
            col: pos.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
            message: None,
        }
    }

    fn error_at(&self, pos: Pos, expected: &[&str], message: String) -> ParseError {
        ParseError {
            line: pos.line,
            col: pos.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: String::new(),
            message: Some(message),
        }
    }

    fn expect_sym(&mut self, s: &'static str) -> Result<(), ParseError> {
        if self.peek() == &Tok::Sym(s) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&format!("`{s}`")]))
        }
    }

    fn expect_kw(&mut self, k: &'static str) -> Result<(), ParseError> {
        if self.peek() == &Tok::Kw(k) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&format!("`{k}`")]))
        }
    }

    fn ident(&mut self) -> Result<(Name, Pos), ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(x) if !is_named_prim(self.prims, &x) => {
                self.bump();
                Ok((x, pos))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    /// Runs `f` with `x : ty` in scope.
    fn scoped<T>(&mut self, x: &Name, ty: Type, f: impl FnOnce(&mut Self) -> T) -> T {
        let saved = self.ctx.clone();
        self.ctx.push(x.clone(), ty);
        let out = f(self);
        self.ctx = saved;
        out
    }

    fn expr(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Tok::Kw("let") => {
                self.bump();
                let (x, _) = self.ident()?;
                self.expect_sym("=")?;
                let bound = self.expr()?;
                self.expect_kw("in")?;
                let body = self.scoped(&x, Type::Real, Self::expr)?;
                Ok(TermKind::Let(x, bound, body).into())
            }
            Tok::Kw("fun") => {
                self.bump();
                let (x, _) = self.ident()?;
                self.expect_sym(":")?;
                let ty = self.binder_type()?;
                self.expect_sym("->")?;
                let body = self.scoped(&x, ty.clone(), Self::expr)?;
                Ok(TermKind::Abs(x, ty, body).into())
            }
            Tok::Kw("ifz") => {
                self.bump();
                let c = self.expr()?;
                self.expect_kw("then")?;
                let m = self.expr()?;
                self.expect_kw("else")?;
                let n = self.expr()?;
                Ok(Term::ifz(c, m, n))
            }
            _ => self.comparison(),
        }
    }

    fn comparison(&mut self) -> Result<Term, ParseError> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Sym(s @ ("=" | "<" | "<=")) => *s,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.additive()?;
        if matches!(self.peek(), Tok::Sym("=" | "<" | "<=")) {
            let pos = self.pos();
            return Err(self.error_at(
                pos,
                &[],
                "comparisons do not associate; add parentheses".into(),
            ));
        }
        Ok(Term::prim(op, vec![lhs, rhs]))
    }

    fn additive(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.multiplicative()?;
        while let Tok::Sym(s @ ("+" | "-")) = self.peek() {
            let op = *s;
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = Term::prim(op, vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.unary()?;
        while let Tok::Sym(s @ ("*" | "/")) = self.peek() {
            let op = *s;
            self.bump();
            let rhs = self.unary()?;
            lhs = Term::prim(op, vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Term, ParseError> {
        if self.peek() != &Tok::Sym("-") {
            return self.application();
        }
        self.bump();
        if let Tok::Num(r) = *self.peek() {
            self.bump();
            return Ok(Term::num(-r));
        }
        Ok(Term::prim("neg", vec![self.unary()?]))
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Ident(_) | Tok::Num(_) | Tok::Kw("sample") | Tok::Sym("(") | Tok::Chi(_) | Tok::Macro(..)
        )
    }

    fn application(&mut self) -> Result<Term, ParseError> {
        let mut head = if self.peek() == &Tok::Kw("fix") {
            self.bump();
            Term::fix(self.atom()?)
        } else {
            self.atom()?
        };
        while self.starts_atom() {
            head = Term::app(head, self.atom()?);
        }
        Ok(head)
    }

    fn call_args(&mut self) -> Result<Vec<Term>, ParseError> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if self.peek() == &Tok::Sym(")") {
            self.bump();
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            match self.peek() {
                Tok::Sym(",") => {
                    self.bump();
                }
                Tok::Sym(")") => {
                    self.bump();
                    return Ok(args);
                }
                _ => return Err(self.error(&["`,`", "`)`"])),
            }
        }
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(x) if is_named_prim(self.prims, &x) => {
                self.bump();
                let args = self.call_args()?;
                Ok(TermKind::Prim(PrimOp::Named(x), args).into())
            }
            Tok::Ident(x) => {
                self.bump();
                Ok(TermKind::Var(x).into())
            }
            Tok::Num(r) => {
                self.bump();
                Ok(Term::num(r))
            }
            Tok::Kw("sample") => {
                self.bump();
                Ok(Term::sample())
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Chi(set) => {
                self.bump();
                self.expect_sym("(")?;
                let arg = self.expr()?;
                self.expect_sym(")")?;
                Ok(Term::chi(set, arg))
            }
            Tok::Macro(name, set) => {
                self.bump();
                let args = if self.peek() == &Tok::Sym("(") {
                    self.macro_args(&name)?
                } else {
                    Vec::new()
                };
                apply_macro(self.prims, &self.ctx, &name, set, args)
                    .map_err(|e| self.macro_error(pos, e))
            }
            _ => Err(self.error(EXPR_START)),
        }
    }

    /// Like [`Self::call_args`], but the third argument of `#let` sees its
    /// bound variable.
    fn macro_args(&mut self, name: &str) -> Result<Vec<Term>, ParseError> {
        if name != "let" {
            return self.call_args();
        }
        self.expect_sym("(")?;
        let mut args = Vec::new();
        let mut bound = None;
        loop {
            let arg = match &bound {
                Some(x) if args.len() == 2 => self.scoped(x, Type::Real, Self::expr)?,
                _ => self.expr()?,
            };
            if args.is_empty() {
                if let TermKind::Var(x) = arg.kind() {
                    bound = Some(x.clone());
                }
            }
            args.push(arg);
            match self.bump() {
                Tok::Sym(",") => {}
                Tok::Sym(")") => return Ok(args),
                _ => {
                    self.at -= 1;
                    return Err(self.error(&["`,`", "`)`"]));
                }
            }
        }
    }

    fn macro_error(&self, pos: Pos, e: SugarError) -> ParseError {
        self.error_at(pos, &[], e.to_string())
    }

    /// The annotation of `fun x : T -> body`. Arrows are consumed greedily
    /// while a type follows, so `fun f : real -> real -> f` annotates `f`
    /// with `real -> real`.
    fn binder_type(&mut self) -> Result<Type, ParseError> {
        let mut parts = vec![self.type_atom()?];
        loop {
            if self.peek() != &Tok::Sym("->") {
                break;
            }
            let save = self.at;
            self.bump();
            match self.type_atom() {
                Ok(t) => parts.push(t),
                Err(_) => {
                    self.at = save;
                    break;
                }
            }
        }
        let last = parts.pop().expect("at least one part");
        Ok(parts.into_iter().rev().fold(last, |acc, t| Type::arrow(t, acc)))
    }

    fn ty(&mut self) -> Result<Type, ParseError> {
        let dom = self.type_atom()?;
        if self.peek() == &Tok::Sym("->") {
            self.bump();
            Ok(Type::arrow(dom, self.ty()?))
        } else {
            Ok(dom)
        }
    }

    fn type_atom(&mut self) -> Result<Type, ParseError> {
        match self.peek() {
            Tok::Kw("real") => {
                self.bump();
                Ok(Type::Real)
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.ty()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            _ => Err(self.error(&["`real`", "`(`"])),
        }
    }
}
