//! Finite unions of real intervals.
//!
//! These are the measurable sets the rest of the crate can query: the
//! argument of `chi[U]`, the sets handed to `mass`, and the probe sets of
//! fixpoint iteration. Endpoints are `f64`; each finite endpoint carries its
//! own open/closed flag and an isolated point `{c}` is the degenerate closed
//! interval `[c,c]`.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use crate::syntax::fmt_real;

/// A single non-empty interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    /// Builds an interval, returning `None` when it is empty. Infinite
    /// endpoints are always treated as open.
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Option<Interval> {
        if lo.is_nan() || hi.is_nan() {
            return None;
        }
        let lo = if lo == 0.0 { 0.0 } else { lo };
        let hi = if hi == 0.0 { 0.0 } else { hi };
        let lo_closed = lo_closed && lo.is_finite();
        let hi_closed = hi_closed && hi.is_finite();
        match lo.partial_cmp(&hi)? {
            Ordering::Greater => None,
            Ordering::Equal if !(lo_closed && hi_closed) => None,
            _ => Some(Interval {
                lo,
                hi,
                lo_closed,
                hi_closed,
            }),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    fn intersect(&self, other: &Interval) -> Option<Interval> {
        let (lo, lo_closed) = match self.lo.partial_cmp(&other.lo)? {
            Ordering::Less => (other.lo, other.lo_closed),
            Ordering::Greater => (self.lo, self.lo_closed),
            Ordering::Equal => (self.lo, self.lo_closed && other.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.partial_cmp(&other.hi)? {
            Ordering::Less => (self.hi, self.hi_closed),
            Ordering::Greater => (other.hi, other.hi_closed),
            Ordering::Equal => (self.hi, self.hi_closed && other.hi_closed),
        };
        Interval::new(lo, hi, lo_closed, hi_closed)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_point() {
            return write!(f, "{{{}}}", fmt_real(self.lo));
        }
        let endpoint = |x: f64| {
            if x == f64::INFINITY {
                "inf".to_string()
            } else if x == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                fmt_real(x)
            }
        };
        write!(
            f,
            "{}{},{}{}",
            if self.lo_closed { '[' } else { '(' },
            endpoint(self.lo),
            endpoint(self.hi),
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// A normalized finite union of intervals: sorted, pairwise disjoint, and
/// with touching intervals merged whenever the union is itself an interval.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IntervalSet {
    parts: Vec<Interval>,
}

impl Eq for IntervalSet {}

/// Serialized as its display form, which parses back to the same set.
impl serde::Serialize for IntervalSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl Hash for IntervalSet {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for p in &self.parts {
            p.lo.to_bits().hash(state);
            p.hi.to_bits().hash(state);
            p.lo_closed.hash(state);
            p.hi_closed.hash(state);
        }
    }
}

impl IntervalSet {
    pub fn empty() -> IntervalSet {
        IntervalSet { parts: Vec::new() }
    }

    pub fn real() -> IntervalSet {
        IntervalSet::from_intervals([Interval::new(f64::NEG_INFINITY, f64::INFINITY, false, false)
            .expect("the real line is non-empty")])
    }

    pub fn point(c: f64) -> IntervalSet {
        IntervalSet::points([c])
    }

    pub fn points(cs: impl IntoIterator<Item = f64>) -> IntervalSet {
        IntervalSet::from_intervals(cs.into_iter().filter_map(|c| Interval::new(c, c, true, true)))
    }

    /// `[lo, hi]`
    pub fn closed(lo: f64, hi: f64) -> IntervalSet {
        IntervalSet::interval(lo, hi, true, true)
    }

    /// `(lo, hi)`
    pub fn open(lo: f64, hi: f64) -> IntervalSet {
        IntervalSet::interval(lo, hi, false, false)
    }

    pub fn interval(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> IntervalSet {
        IntervalSet::from_intervals(Interval::new(lo, hi, lo_closed, hi_closed))
    }

    /// `(-inf, x]`, the sets queried by a CDF grid.
    pub fn at_most(x: f64) -> IntervalSet {
        IntervalSet::interval(f64::NEG_INFINITY, x, false, true)
    }

    pub fn from_intervals(parts: impl IntoIterator<Item = Interval>) -> IntervalSet {
        let mut parts: Vec<Interval> = parts.into_iter().collect();
        parts.sort_by(|a, b| {
            a.lo.total_cmp(&b.lo)
                .then_with(|| b.lo_closed.cmp(&a.lo_closed))
        });
        let mut merged: Vec<Interval> = Vec::with_capacity(parts.len());
        for p in parts {
            if let Some(last) = merged.last_mut() {
                let touches = p.lo < last.hi
                    || (p.lo == last.hi && (last.hi_closed || p.lo_closed));
                if touches {
                    if p.hi > last.hi {
                        last.hi = p.hi;
                        last.hi_closed = p.hi_closed;
                    } else if p.hi == last.hi {
                        last.hi_closed |= p.hi_closed;
                    }
                    continue;
                }
            }
            merged.push(p);
        }
        IntervalSet { parts: merged }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn is_bounded(&self) -> bool {
        self.parts.iter().all(Interval::is_bounded)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.parts.iter().any(|p| p.contains(x))
    }

    pub fn complement(&self) -> IntervalSet {
        let mut out = Vec::with_capacity(self.parts.len() + 1);
        let mut lo = f64::NEG_INFINITY;
        let mut lo_closed = false;
        for p in &self.parts {
            out.extend(Interval::new(lo, p.lo, lo_closed, !p.lo_closed));
            lo = p.hi;
            lo_closed = !p.hi_closed;
        }
        out.extend(Interval::new(lo, f64::INFINITY, lo_closed, false));
        IntervalSet::from_intervals(out)
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        IntervalSet::from_intervals(self.parts.iter().chain(&other.parts).copied())
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        for a in &self.parts {
            for b in &other.parts {
                out.extend(a.intersect(b));
            }
        }
        IntervalSet::from_intervals(out)
    }

    pub fn is_subset(&self, other: &IntervalSet) -> bool {
        self.intersect(&other.complement()).is_empty()
    }

    /// Lebesgue measure of the set.
    pub fn length(&self) -> f64 {
        self.parts.iter().map(Interval::length).sum()
    }

    /// Renders the set with an explicit union separator (`" + "` for the
    /// command line, `" ∪ "` inside terms).
    pub fn display_with(&self, sep: &str) -> String {
        if self.parts.is_empty() {
            return "{}".to_string();
        }
        self.parts
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(sep)
    }

    /// Parses a set from the front of `src`, returning the set and the number
    /// of bytes consumed. Parsing stops at the first character that cannot
    /// continue the union, so callers can embed sets in larger syntax.
    pub fn parse_prefix(src: &str) -> Result<(IntervalSet, usize), SetParseError> {
        let mut cur = SetCursor { src, pos: 0 };
        let mut parts = Vec::new();
        loop {
            cur.skip_ws();
            cur.item(&mut parts)?;
            let save = cur.pos;
            cur.skip_ws();
            if !cur.union_sep() {
                cur.pos = save;
                break;
            }
        }
        Ok((IntervalSet::from_intervals(parts), cur.pos))
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(" + "))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid interval set at byte {offset}: {message}")]
pub struct SetParseError {
    pub offset: usize,
    pub message: String,
}

impl FromStr for IntervalSet {
    type Err = SetParseError;

    fn from_str(s: &str) -> Result<IntervalSet, SetParseError> {
        let (set, used) = IntervalSet::parse_prefix(s)?;
        if s[used..].trim().is_empty() {
            Ok(set)
        } else {
            Err(SetParseError {
                offset: used,
                message: format!("unexpected trailing input {:?}", s[used..].trim()),
            })
        }
    }
}

struct SetCursor<'a> {
    src: &'a str,
    pos: usize,
}

impl SetCursor<'_> {
    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn error(&self, message: impl Into<String>) -> SetParseError {
        SetParseError {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), SetParseError> {
        self.skip_ws();
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    fn union_sep(&mut self) -> bool {
        self.eat('+') || self.eat('∪')
    }

    fn item(&mut self, parts: &mut Vec<Interval>) -> Result<(), SetParseError> {
        match self.peek() {
            Some('{') => {
                self.pos += 1;
                self.skip_ws();
                if self.eat('}') {
                    return Ok(());
                }
                loop {
                    let c = self.number()?;
                    if !c.is_finite() {
                        return Err(self.error("isolated points must be finite"));
                    }
                    parts.extend(Interval::new(c, c, true, true));
                    self.skip_ws();
                    if self.eat('}') {
                        return Ok(());
                    }
                    self.expect(',')?;
                }
            }
            Some('∅') => {
                self.pos += '∅'.len_utf8();
                Ok(())
            }
            Some(open @ ('[' | '(')) => {
                self.pos += 1;
                let lo = self.number()?;
                self.expect(',')?;
                let hi = self.number()?;
                self.skip_ws();
                let hi_closed = match self.peek() {
                    Some(']') => true,
                    Some(')') => false,
                    _ => return Err(self.error("expected ']' or ')'")),
                };
                self.pos += 1;
                if lo > hi {
                    return Err(self.error("interval has lower bound above upper bound"));
                }
                parts.extend(Interval::new(lo, hi, open == '[', hi_closed));
                Ok(())
            }
            _ => Err(self.error("expected '[', '(' or '{'")),
        }
    }

    fn number(&mut self) -> Result<f64, SetParseError> {
        self.skip_ws();
        let rest = self.rest();
        let bytes = rest.as_bytes();
        let mut i = 0;
        if i < bytes.len() && (bytes[i] == b'-' || bytes[i] == b'+') {
            i += 1;
        }
        if rest[i..].starts_with("inf") {
            let neg = bytes.first() == Some(&b'-');
            self.pos += i + 3;
            return Ok(if neg { f64::NEG_INFINITY } else { f64::INFINITY });
        }
        let len = i + scan_decimal(&rest[i..]);
        if len == i {
            return Err(self.error("expected a number"));
        }
        let value: f64 = rest[..len]
            .parse()
            .map_err(|_| self.error(format!("malformed number {:?}", &rest[..len])))?;
        self.pos += len;
        Ok(value)
    }
}

/// Length of the longest prefix of `s` shaped like an unsigned decimal
/// literal: `digits [. digits] [e [+-] digits]`.
pub(crate) fn scan_decimal(s: &str) -> usize {
    let b = s.as_bytes();
    let mut i = 0;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    if i == 0 {
        return 0;
    }
    if i < b.len() && b[i] == b'.' && b.get(i + 1).is_some_and(u8::is_ascii_digit) {
        i += 1;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut j = i + 1;
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        if j < b.len() && b[j].is_ascii_digit() {
            while j < b.len() && b[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    i
}
