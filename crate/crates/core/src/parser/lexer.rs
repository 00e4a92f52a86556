use std::fmt;

use super::ParseError;
use crate::interval::{scan_decimal, IntervalSet};
use crate::syntax::Name;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(Name),
    Num(f64),
    Kw(&'static str),
    Sym(&'static str),
    /// `chi[U]`
    Chi(IntervalSet),
    /// `#name` or `#name[U]`
    Macro(String, Option<IntervalSet>),
    Eof,
}

pub(crate) const KEYWORDS: &[&str] = &[
    "let", "in", "fun", "fix", "ifz", "then", "else", "sample", "def", "real",
];

// Longest first so that `<=` wins over `<` and `->` over `-`.
const SYMBOLS: &[&str] = &["->", "<=", "≤", "(", ")", ",", ";", ":", "=", "<", "+", "-", "*", "/"];

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(x) => write!(f, "identifier `{x}`"),
            Tok::Num(r) => write!(f, "number `{r}`"),
            Tok::Kw(k) => write!(f, "`{k}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Chi(_) => f.write_str("`chi[...]`"),
            Tok::Macro(m, _) => write!(f, "`#{m}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Pos {
    pub line: usize,
    pub col: usize,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut lx = Lexer {
        src,
        at: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        lx.skip_trivia();
        let pos = lx.pos();
        let tok = lx.next_token()?;
        let done = tok == Tok::Eof;
        out.push((tok, pos));
        if done {
            return Ok(out);
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    at: usize,
    line: usize,
    col: usize,
}

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '\'' | '#')
}

impl Lexer<'_> {
    fn rest(&self) -> &str {
        &self.src[self.at..]
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn advance(&mut self, bytes: usize) {
        for c in self.src[self.at..self.at + bytes].chars() {
            if c == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
        self.at += bytes;
    }

    fn skip_trivia(&mut self) {
        loop {
            let r = self.rest();
            let ws = r.len() - r.trim_start().len();
            if ws > 0 {
                self.advance(ws);
            } else if r.starts_with("--") {
                let line = r.find('\n').unwrap_or(r.len());
                self.advance(line);
            } else {
                return;
            }
        }
    }

    fn error(&self, expected: &[&str], found: impl Into<String>) -> ParseError {
        let p = self.pos();
        ParseError {
            line: p.line,
            col: p.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: found.into(),
            message: None,
        }
    }

    fn next_token(&mut self) -> Result<Tok, ParseError> {
        let r = self.rest();
        let Some(c) = r.chars().next() else {
            return Ok(Tok::Eof);
        };
        if c.is_ascii_digit() {
            let n = scan_decimal(r);
            let value: f64 = r[..n]
                .parse()
                .map_err(|_| self.error(&["number"], &r[..n]))?;
            self.advance(n);
            return Ok(Tok::Num(value));
        }
        if ident_start(c) {
            let n = r.find(|c| !ident_continue(c)).unwrap_or(r.len());
            let word = r[..n].to_string();
            self.advance(n);
            if word == "chi" {
                return Ok(Tok::Chi(self.set_argument(true)?.expect("required")));
            }
            return Ok(match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word.as_str().into()),
            });
        }
        if c == '#' {
            let body = &r[1..];
            let n = body.find(|c| !ident_continue(c)).unwrap_or(body.len());
            if n == 0 || !body.starts_with(ident_start) {
                return Err(self.error(&["macro name"], "`#`"));
            }
            let name = body[..n].to_string();
            self.advance(1 + n);
            let set = self.set_argument(false)?;
            return Ok(Tok::Macro(name, set));
        }
        match SYMBOLS.iter().find(|s| r.starts_with(**s)) {
            Some(&s) => {
                self.advance(s.len());
                Ok(Tok::Sym(if s == "≤" { "<=" } else { s }))
            }
            None => Err(self.error(&["token"], format!("`{c}`"))),
        }
    }

    /// A bracketed set directly after `chi` or a macro name. Both
    /// `[[0,1)]` (brackets around the set) and `[0,1)` (the set itself) are
    /// accepted.
    fn set_argument(&mut self, required: bool) -> Result<Option<IntervalSet>, ParseError> {
        let r = self.rest();
        if !r.starts_with('[') {
            if required {
                return Err(self.error(&["`[`"], describe_next(r)));
            }
            return Ok(None);
        }
        let wrapped = IntervalSet::parse_prefix(&r[1..]).ok().and_then(|(set, used)| {
            let after = &r[1 + used..];
            let close = after.len() - after.trim_start().len();
            after[close..].starts_with(']').then_some((set, 1 + used + close + 1))
        });
        let (set, used) = match wrapped {
            Some(found) => found,
            None => match IntervalSet::parse_prefix(r) {
                Ok(found) => found,
                Err(e) => {
                    let mut err = self.error(&["interval set"], describe_next(&r[e.offset..]));
                    err.message = Some(e.message);
                    return Err(err);
                }
            },
        };
        self.advance(used);
        Ok(Some(set))
    }
}

fn describe_next(r: &str) -> String {
    match r.chars().next() {
        Some(c) => format!("`{c}`"),
        None => "end of input".into(),
    }
}
