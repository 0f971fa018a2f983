//! Extended reals `(-inf, +inf]` and real intervals.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

/// A value in `(-inf, +inf]`.
///
/// `-inf` is not representable: every convex function handled by this crate
/// is proper, so it never attains it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Lifts an `f64`, mapping `+inf` to [`ExtReal::PosInf`].
    ///
    /// Panics on NaN and on `-inf`.
    pub fn from_f64(v: f64) -> ExtReal {
        assert!(!v.is_nan(), "NaN is not an extended real");
        if v == f64::INFINITY {
            ExtReal::PosInf
        } else {
            assert!(v != f64::NEG_INFINITY, "-inf is not in (-inf, +inf]");
            ExtReal::Finite(v)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInf => None,
        }
    }

    /// `f64` view with `+inf` for [`ExtReal::PosInf`].
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(v) => v,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    /// Multiplication by `lambda >= 0` with the convention `0 * inf = inf`,
    /// so that scaling never enlarges the effective domain.
    pub fn scale(self, lambda: f64) -> ExtReal {
        debug_assert!(lambda >= 0.0);
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(lambda * v),
            ExtReal::PosInf => ExtReal::PosInf,
        }
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal::from_f64(v)
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::PosInf,
        }
    }
}

impl std::iter::Sum for ExtReal {
    fn sum<I: Iterator<Item = ExtReal>>(iter: I) -> ExtReal {
        iter.fold(ExtReal::ZERO, |acc, v| acc + v)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &ExtReal) -> Option<Ordering> {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
            (ExtReal::Finite(_), ExtReal::PosInf) => Some(Ordering::Less),
            (ExtReal::PosInf, ExtReal::Finite(_)) => Some(Ordering::Greater),
            (ExtReal::PosInf, ExtReal::PosInf) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInf => write!(f, "inf"),
        }
    }
}

/// A real interval with possibly infinite endpoints. Whether the endpoints
/// belong to the set is up to the producer; [`crate::ConvexFunction::ray_domain`]
/// always returns open intervals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub const EMPTY: Interval = Interval {
        lo: f64::INFINITY,
        hi: f64::NEG_INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }

    /// True when the open interval `(lo, hi)` is empty.
    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.max(other.lo),
            hi: self.hi.min(other.hi),
        }
    }

    pub fn contains_open(&self, s: f64) -> bool {
        self.lo < s && s < self.hi
    }

    pub fn contains_closed(&self, s: f64) -> bool {
        self.lo <= s && s <= self.hi
    }

    pub fn length(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_absorbs_addition() {
        assert_eq!(ExtReal::Finite(1.0) + ExtReal::Finite(2.0), ExtReal::Finite(3.0));
        assert_eq!(ExtReal::Finite(1.0) + ExtReal::PosInf, ExtReal::PosInf);
        assert_eq!(ExtReal::PosInf + ExtReal::PosInf, ExtReal::PosInf);
    }

    #[test]
    fn infinity_is_maximal() {
        assert!(ExtReal::Finite(1e300) < ExtReal::PosInf);
        assert_eq!(ExtReal::PosInf.max(ExtReal::Finite(3.0)), ExtReal::PosInf);
        assert_eq!(ExtReal::Finite(-1.0).max(ExtReal::Finite(3.0)), ExtReal::Finite(3.0));
    }

    #[test]
    fn zero_scale_keeps_infinity() {
        assert_eq!(ExtReal::PosInf.scale(0.0), ExtReal::PosInf);
        assert_eq!(ExtReal::Finite(5.0).scale(0.0), ExtReal::Finite(0.0));
    }

    #[test]
    fn display_renders_inf_literal() {
        assert_eq!(ExtReal::PosInf.to_string(), "inf");
        assert_eq!(ExtReal::Finite(0.5).to_string(), "0.5");
    }
}
