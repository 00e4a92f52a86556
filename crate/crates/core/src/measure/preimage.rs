//! Exact preimages of interval sets under piecewise monotone functions.
//!
//! On a piece where `f` is monotone, `{x : f(x) ∈ I}` is an interval, so its
//! two endpoints can be found by bisection over the ordered set of floats.
//! The result holds exactly the floats that map into `I`, which keeps atom
//! membership exact, and runs to a piece's endpoint when it reaches the
//! piece's last float.

use crate::interval::{Interval, IntervalSet};
use crate::syntax::MAX_REAL;

// Order-preserving map from finite floats to integers.
fn key(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

fn unkey(k: u64) -> f64 {
    if k >> 63 == 1 {
        f64::from_bits(k & !(1 << 63))
    } else {
        f64::from_bits(!k)
    }
}

/// Smallest float in `[lo, hi]` satisfying `pred`, for `pred` that switches
/// from false to true at most once.
fn first_true(lo: f64, hi: f64, pred: impl Fn(f64) -> bool) -> Option<f64> {
    if !pred(hi) {
        return None;
    }
    if pred(lo) {
        return Some(lo);
    }
    let (mut a, mut b) = (key(lo), key(hi));
    while b - a > 1 {
        let m = a + (b - a) / 2;
        if pred(unkey(m)) {
            b = m;
        } else {
            a = m;
        }
    }
    Some(unkey(b))
}

/// Largest float in `[lo, hi]` satisfying `pred`, for `pred` that switches
/// from true to false at most once.
fn last_true(lo: f64, hi: f64, pred: impl Fn(f64) -> bool) -> Option<f64> {
    if !pred(lo) {
        return None;
    }
    if pred(hi) {
        return Some(hi);
    }
    let (mut a, mut b) = (key(lo), key(hi));
    while b - a > 1 {
        let m = a + (b - a) / 2;
        if pred(unkey(m)) {
            a = m;
        } else {
            b = m;
        }
    }
    Some(unkey(a))
}

/// The floats of `piece`, as a closed range.
fn float_range(piece: &Interval) -> Option<(f64, f64)> {
    let lo = if piece.lo == f64::NEG_INFINITY {
        -MAX_REAL
    } else if piece.lo_closed {
        piece.lo
    } else {
        unkey(key(piece.lo) + 1)
    };
    let hi = if piece.hi == f64::INFINITY {
        MAX_REAL
    } else if piece.hi_closed {
        piece.hi
    } else {
        unkey(key(piece.hi) - 1)
    };
    (lo <= hi).then_some((lo, hi))
}

/// `f⁻¹(u)`, given pieces covering the domain on each of which `f` is
/// monotone.
pub fn preimage(f: &dyn Fn(f64) -> f64, pieces: &[Interval], u: &IntervalSet) -> IntervalSet {
    let mut parts = Vec::new();
    for piece in pieces {
        let Some((plo, phi)) = float_range(piece) else {
            continue;
        };
        let increasing = f(plo) <= f(phi);
        for target in u.intervals() {
            let above_lo = |y: f64| y > target.lo || (y == target.lo && target.lo_closed);
            let below_hi = |y: f64| y < target.hi || (y == target.hi && target.hi_closed);
            let (x1, x2) = if increasing {
                (
                    first_true(plo, phi, |x| above_lo(f(x))),
                    last_true(plo, phi, |x| below_hi(f(x))),
                )
            } else {
                (
                    first_true(plo, phi, |x| below_hi(f(x))),
                    last_true(plo, phi, |x| above_lo(f(x))),
                )
            };
            if let (Some(x1), Some(x2)) = (x1, x2) {
                // Reaching the last float of a piece means reaching its real
                // endpoint, since f is monotone on the whole piece.
                let (lo, lo_closed) = if x1 == plo { (piece.lo, piece.lo_closed) } else { (x1, true) };
                let (hi, hi_closed) = if x2 == phi { (piece.hi, piece.hi_closed) } else { (x2, true) };
                parts.extend(Interval::new(lo, hi, lo_closed, hi_closed));
            }
        }
    }
    IntervalSet::from_intervals(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::PrimitiveTable;

    fn whole() -> Vec<Interval> {
        vec![Interval::new(f64::NEG_INFINITY, f64::INFINITY, false, false).unwrap()]
    }

    #[test]
    fn float_order_round_trips() {
        for x in [-3.5, -0.0, 0.0, 1e-300, 7.0, MAX_REAL, -MAX_REAL] {
            assert_eq!(unkey(key(x)).to_bits(), x.to_bits());
        }
        assert!(key(-1.0) < key(-0.0) && key(-0.0) < key(0.0) && key(0.0) < key(1e-320));
    }

    #[test]
    fn decreasing_function() {
        let neg = |x: f64| -x;
        let pre = preimage(&neg, &whole(), &IntervalSet::interval(1.0, 2.0, true, false));
        assert!(pre.contains(-1.0) && pre.contains(-1.5) && !pre.contains(-2.0));
        assert!(pre.contains(unkey(key(-2.0) + 1)) && !pre.contains(-0.5));
    }

    #[test]
    fn log_preimage() {
        let log = PrimitiveTable::standard().get("log").unwrap();
        let f = |x: f64| log.apply(&[x]);
        let pre = preimage(&f, log.monotone_pieces.as_ref().unwrap(), &IntervalSet::at_most(0.0));
        // log x <= 0 for x <= 1, including the totalized non-positive part.
        assert!(pre.contains(-5.0) && pre.contains(1.0) && !pre.contains(1.0 + f64::EPSILON));
    }

    #[test]
    fn constant_pieces() {
        let chi = crate::syntax::Primitive::chi(IntervalSet::closed(0.0, 0.5));
        let f = |x: f64| chi.apply(&[x]);
        let pre = preimage(&f, chi.monotone_pieces.as_ref().unwrap(), &IntervalSet::point(0.0));
        assert!(!pre.contains(0.25) && pre.contains(0.75) && pre.contains(-1.0));
        assert!(!pre.contains(0.5) && pre.contains(0.5 + f64::EPSILON));
    }
}
