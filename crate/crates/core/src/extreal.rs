//! Extended real numbers `[-inf, +inf]`.
//!
//! Integrands and integrals range over the extended reals. The one sum that
//! has no value, `(+inf) + (-inf)`, is surfaced as `None` by [`ExtReal::checked_add`]
//! rather than silently collapsing to anything.

use serde::{Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;

/// A value in `[-inf, +inf]`. Finite payloads are never NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    /// Wraps a finite float. Panics on NaN; infinities map to the infinite tags.
    pub fn new(v: f64) -> ExtReal {
        assert!(!v.is_nan(), "ExtReal cannot hold NaN");
        if v == f64::INFINITY {
            ExtReal::PosInf
        } else if v == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(v)
        }
    }

    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// Finite payload, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Lossy conversion for arithmetic where both infinities are admissible.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(v) => v,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    /// Sum, or `None` for the undefined case `(+inf) + (-inf)`.
    pub fn checked_add(self, rhs: ExtReal) -> Option<ExtReal> {
        use ExtReal::*;
        match (self, rhs) {
            (PosInf, NegInf) | (NegInf, PosInf) => None,
            (PosInf, _) | (_, PosInf) => Some(PosInf),
            (NegInf, _) | (_, NegInf) => Some(NegInf),
            (Finite(a), Finite(b)) => Some(ExtReal::new(a + b)),
        }
    }

    /// Difference `self - rhs`, or `None` when undefined.
    pub fn checked_sub(self, rhs: ExtReal) -> Option<ExtReal> {
        self.checked_add(rhs.neg())
    }

    pub fn neg(self) -> ExtReal {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::Finite(v) => ExtReal::Finite(-v),
            ExtReal::PosInf => ExtReal::NegInf,
        }
    }

    pub fn abs(self) -> ExtReal {
        match self {
            ExtReal::NegInf | ExtReal::PosInf => ExtReal::PosInf,
            ExtReal::Finite(v) => ExtReal::Finite(v.abs()),
        }
    }

    /// Positive part `max(x, 0)`.
    pub fn pos_part(self) -> ExtReal {
        self.max(ExtReal::ZERO)
    }

    /// Negative part `-min(x, 0)`, always nonnegative.
    pub fn neg_part(self) -> ExtReal {
        self.neg().max(ExtReal::ZERO)
    }

    /// Scales by a nonnegative finite weight with the convention `0 * (+-inf) = 0`.
    pub fn scale_by_weight(self, w: f64) -> ExtReal {
        assert!(w.is_finite() && w >= 0.0, "weight must be finite nonnegative");
        if w == 0.0 {
            return ExtReal::ZERO;
        }
        match self {
            ExtReal::NegInf => ExtReal::NegInf,
            ExtReal::Finite(v) => ExtReal::new(v * w),
            ExtReal::PosInf => ExtReal::PosInf,
        }
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        use ExtReal::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (PosInf, _) | (_, NegInf) => Ordering::Greater,
            (Finite(a), Finite(b)) => a.partial_cmp(b).expect("no NaN in ExtReal"),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::PosInf => write!(f, "+inf"),
            // 17 significant digits round-trips every f64.
            ExtReal::Finite(v) => write!(f, "{:.16e}", v),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal::new(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn opposite_infinities_have_no_sum() {
        assert_eq!(ExtReal::PosInf.checked_add(ExtReal::NegInf), None);
        assert_eq!(ExtReal::NegInf.checked_add(ExtReal::PosInf), None);
        assert_eq!(
            ExtReal::PosInf.checked_add(ExtReal::PosInf),
            Some(ExtReal::PosInf)
        );
    }

    #[test]
    fn zero_weight_annihilates_infinity() {
        assert_eq!(ExtReal::PosInf.scale_by_weight(0.0), ExtReal::ZERO);
        assert_eq!(ExtReal::NegInf.scale_by_weight(0.0), ExtReal::ZERO);
        assert_eq!(ExtReal::PosInf.scale_by_weight(0.5), ExtReal::PosInf);
    }

    #[test]
    fn ordering_spans_the_extended_line() {
        let vals = [
            ExtReal::NegInf,
            ExtReal::new(-3.0),
            ExtReal::ZERO,
            ExtReal::new(7.5),
            ExtReal::PosInf,
        ];
        for w in vals.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    #[should_panic]
    fn nan_is_rejected() {
        ExtReal::new(f64::NAN);
    }

    #[test]
    fn parts_split_sign() {
        let x = ExtReal::new(-2.0);
        assert_eq!(x.pos_part(), ExtReal::ZERO);
        assert_eq!(x.neg_part(), ExtReal::new(2.0));
        assert_eq!(ExtReal::NegInf.neg_part(), ExtReal::PosInf);
    }
}
