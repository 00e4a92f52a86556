use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use super::{sanitize, Name};
use crate::interval::{Interval, IntervalSet};

/// Stand-in for the infinities: totalized primitives saturate here.
pub const MAX_REAL: f64 = f64::MAX;

/// The head of a primitive application.
#[derive(Clone, Debug, PartialEq)]
pub enum PrimOp {
    /// A primitive looked up by name in a [`PrimitiveTable`].
    Named(Name),
    /// The characteristic function of a set: 1 inside, 0 outside.
    Chi(IntervalSet),
}

impl PrimOp {
    pub fn named(name: &str) -> PrimOp {
        PrimOp::Named(name.into())
    }
}

impl fmt::Display for PrimOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrimOp::Named(n) => f.write_str(n),
            PrimOp::Chi(u) => write!(f, "chi[{}]", u.display_with(" ∪ ")),
        }
    }
}

type PrimFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// For a primitive of several arguments: given argument index `i` and a full
/// argument vector, domain pieces on which `x ↦ f(args[i := x])` is monotone.
pub type SectionFn = fn(usize, &[f64]) -> Vec<Interval>;

/// A total function `R^n -> R`.
#[derive(Clone)]
pub struct Primitive {
    pub name: Name,
    pub arity: usize,
    func: Arc<PrimFn>,
    /// For unary primitives: domain pieces on each of which the function is
    /// continuous and monotone. Lets pushforwards compute exact preimages.
    pub monotone_pieces: Option<Vec<Interval>>,
    pub sections: Option<SectionFn>,
    /// How the primitive was made total, if it needed it.
    pub totalization: Option<&'static str>,
}

impl fmt::Debug for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Primitive")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .finish_non_exhaustive()
    }
}

impl Primitive {
    pub fn new(
        name: &str,
        arity: usize,
        func: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Primitive {
        assert!(arity >= 1, "primitives take at least one argument");
        Primitive {
            name: name.into(),
            arity,
            func: Arc::new(func),
            monotone_pieces: None,
            sections: None,
            totalization: None,
        }
    }

    fn monotone_on(mut self, pieces: Vec<Interval>) -> Primitive {
        self.monotone_pieces = Some(pieces);
        self
    }

    fn sectioned(mut self, sections: SectionFn) -> Primitive {
        self.sections = Some(sections);
        self
    }

    /// Pieces on which `f` is monotone in argument `i` when the other
    /// arguments are fixed to the values in `args`.
    pub fn section_pieces(&self, i: usize, args: &[f64]) -> Option<Vec<Interval>> {
        if self.arity == 1 {
            self.monotone_pieces.clone()
        } else {
            self.sections.map(|s| s(i, args))
        }
    }

    fn totalized(mut self, note: &'static str) -> Primitive {
        self.totalization = Some(note);
        self
    }

    /// The characteristic function of `set`.
    pub fn chi(set: IntervalSet) -> Primitive {
        let name = PrimOp::Chi(set.clone()).to_string();
        // Constant, hence monotone, on each interval of the set and of its
        // complement.
        let pieces = set
            .intervals()
            .iter()
            .chain(set.complement().intervals())
            .copied()
            .collect();
        let mut p = Primitive::new("chi", 1, move |x| if set.contains(x[0]) { 1.0 } else { 0.0 })
            .monotone_on(pieces);
        p.name = name.into();
        p
    }

    /// Applies the primitive; the result is always finite.
    #[inline]
    pub fn apply(&self, args: &[f64]) -> f64 {
        debug_assert_eq!(args.len(), self.arity);
        sanitize((self.func)(args))
    }
}

/// Named primitives available to programs.
#[derive(Clone, Debug)]
pub struct PrimitiveTable {
    entries: BTreeMap<Name, Primitive>,
}

fn bool_real(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn whole_line() -> Interval {
    Interval::new(f64::NEG_INFINITY, f64::INFINITY, false, false).expect("non-empty")
}

fn monotone_everywhere(_: usize, _: &[f64]) -> Vec<Interval> {
    vec![whole_line()]
}

/// Splits the line at `c`: below, the point itself, above.
fn around(c: f64) -> Vec<Interval> {
    [
        Interval::new(f64::NEG_INFINITY, c, false, false),
        Interval::new(c, c, true, true),
        Interval::new(c, f64::INFINITY, false, false),
    ]
    .into_iter()
    .flatten()
    .collect()
}

fn comparison_sections(i: usize, args: &[f64]) -> Vec<Interval> {
    around(args[1 - i])
}

fn division_sections(i: usize, _: &[f64]) -> Vec<Interval> {
    if i == 0 {
        vec![whole_line()]
    } else {
        around(0.0)
    }
}

impl PrimitiveTable {
    pub fn empty() -> PrimitiveTable {
        PrimitiveTable {
            entries: BTreeMap::new(),
        }
    }

    /// Arithmetic, comparisons (returning 1/0), and the usual transcendental
    /// functions, each totalized where the mathematical function is partial.
    pub fn standard() -> &'static PrimitiveTable {
        static TABLE: OnceLock<PrimitiveTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            let nonpos = Interval::new(f64::NEG_INFINITY, 0.0, false, true).expect("non-empty");
            let pos = Interval::new(0.0, f64::INFINITY, false, false).expect("non-empty");
            let nonneg = Interval::new(0.0, f64::INFINITY, true, false).expect("non-empty");
            let neg = Interval::new(f64::NEG_INFINITY, 0.0, false, false).expect("non-empty");
            let mut t = PrimitiveTable::empty();
            let mono = monotone_everywhere as SectionFn;
            t.insert(Primitive::new("+", 2, |a| a[0] + a[1]).sectioned(mono));
            t.insert(Primitive::new("-", 2, |a| a[0] - a[1]).sectioned(mono));
            t.insert(Primitive::new("*", 2, |a| a[0] * a[1]).sectioned(mono));
            t.insert(
                Primitive::new("/", 2, |a| if a[1] == 0.0 { 0.0 } else { a[0] / a[1] })
                    .sectioned(division_sections)
                    .totalized("x/0 = 0"),
            );
            t.insert(Primitive::new("=", 2, |a| bool_real(a[0] == a[1])).sectioned(comparison_sections));
            t.insert(Primitive::new("<", 2, |a| bool_real(a[0] < a[1])).sectioned(comparison_sections));
            t.insert(Primitive::new("<=", 2, |a| bool_real(a[0] <= a[1])).sectioned(comparison_sections));
            t.insert(Primitive::new("neg", 1, |a| -a[0]).monotone_on(vec![whole_line()]));
            t.insert(
                Primitive::new("log", 1, |a| if a[0] > 0.0 { a[0].ln() } else { -MAX_REAL })
                    .monotone_on(vec![nonpos, pos])
                    .totalized("log(x) = -MAX_REAL for x <= 0"),
            );
            t.insert(Primitive::new("exp", 1, |a| a[0].exp()).monotone_on(vec![whole_line()]));
            t.insert(
                Primitive::new("sqrt", 1, |a| if a[0] > 0.0 { a[0].sqrt() } else { 0.0 })
                    .monotone_on(vec![neg, nonneg])
                    .totalized("sqrt(x) = 0 for x < 0"),
            );
            t.insert(Primitive::new("cos", 1, |a| a[0].cos()));
            t.insert(Primitive::new("sin", 1, |a| a[0].sin()));
            t.insert(Primitive::new("abs", 1, |a| a[0].abs()).monotone_on(vec![neg, nonneg]));
            t.insert(Primitive::new("min", 2, |a| a[0].min(a[1])).sectioned(mono));
            t.insert(Primitive::new("max", 2, |a| a[0].max(a[1])).sectioned(mono));
            t
        })
    }

    pub fn insert(&mut self, p: Primitive) {
        self.entries.insert(p.name.clone(), p);
    }

    /// A copy of the table with `name` rebound to `replacement`'s function
    /// (keeping the name). Used to inject faults into one side of a
    /// comparison.
    pub fn with_override(&self, name: &str, replacement: &Primitive) -> PrimitiveTable {
        let mut t = self.clone();
        let mut p = replacement.clone();
        p.name = name.into();
        t.insert(p);
        t
    }

    pub fn get(&self, name: &str) -> Option<&Primitive> {
        self.entries.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|k| k.as_ref())
    }

    pub fn arity(&self, op: &PrimOp) -> Option<usize> {
        match op {
            PrimOp::Named(n) => self.get(n).map(|p| p.arity),
            PrimOp::Chi(_) => Some(1),
        }
    }

    /// Evaluates `op` on numerals.
    pub fn eval(&self, op: &PrimOp, args: &[f64]) -> Option<f64> {
        match op {
            PrimOp::Named(n) => self.get(n).map(|p| p.apply(args)),
            PrimOp::Chi(u) => Some(bool_real(u.contains(args[0]))),
        }
    }

    pub fn resolve(&self, op: &PrimOp) -> Option<Primitive> {
        match op {
            PrimOp::Named(n) => self.get(n).cloned(),
            PrimOp::Chi(u) => Some(Primitive::chi(u.clone())),
        }
    }
}
