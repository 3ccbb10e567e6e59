//! Closed intervals of `f64` and the handful of interval-arithmetic
//! operations the rest of the crate needs.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A closed interval `[lo, hi]`. Constructors do not enforce `lo <= hi`;
/// network validation reports inverted intervals with their location instead
/// of panicking deep inside arithmetic.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };

    pub fn new(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }

    /// The singular interval `[x, x]`.
    pub fn point(x: f64) -> Interval {
        Interval { lo: x, hi: x }
    }

    pub fn is_point(self) -> bool {
        self.lo == self.hi
    }

    pub fn width(self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    /// Smallest interval containing both operands.
    pub fn hull(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn add(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo + other.lo,
            hi: self.hi + other.hi,
        }
    }

    /// Range of `w * x` for `w` in this interval and a fixed `x`.
    /// Exact: for `x >= 0` it is `[lo*x, hi*x]`, otherwise flipped.
    pub fn mul_value(self, x: f64) -> Interval {
        if x >= 0.0 {
            Interval { lo: self.lo * x, hi: self.hi * x }
        } else {
            Interval { lo: self.hi * x, hi: self.lo * x }
        }
    }

    /// Range of `w * x` for `w` in `self` and `x` in `other`.
    pub fn mul(self, other: Interval) -> Interval {
        let products = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ];
        let mut lo = products[0];
        let mut hi = products[0];
        for &p in &products[1..] {
            lo = lo.min(p);
            hi = hi.max(p);
        }
        Interval { lo, hi }
    }

    /// Image under the rectifier: `[max(0, lo), max(0, hi)]`.
    pub fn relu(self) -> Interval {
        Interval {
            lo: self.lo.max(0.0),
            hi: self.hi.max(0.0),
        }
    }

    /// Scales both endpoints by a non-negative factor.
    pub fn scale(self, k: f64) -> Interval {
        debug_assert!(k >= 0.0);
        Interval {
            lo: k * self.lo,
            hi: k * self.hi,
        }
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}
