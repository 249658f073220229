//! Extended nonnegative costs: the common value domain of stage costs and
//! value functions.
//!
//! Everything in this crate accumulates costs in `[0, ∞]`. Infinity is a
//! first-class value rather than a large float: the fixed points of the
//! optimality equation are distinguished precisely by *where* they are
//! infinite, so `∞` must survive arithmetic exactly. Addition saturates
//! (`a + ∞ = ∞`) and the order is total (`finite < ∞`).

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::Add;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A nonnegative cost: a finite real or `+∞`.
///
/// Finite payloads are guaranteed nonnegative and non-NaN; both constructors
/// enforce this.
#[derive(Clone, Copy, Debug)]
pub enum ExtendedCost {
    Finite(f64),
    Infinite,
}

pub use ExtendedCost::{Finite, Infinite};

impl ExtendedCost {
    pub const ZERO: ExtendedCost = Finite(0.0);

    /// Wraps a finite value. Panics on NaN or negative input; use
    /// [`ExtendedCost::checked`] when the value comes from outside.
    pub fn finite(value: f64) -> Self {
        assert!(
            value >= 0.0 && value.is_finite(),
            "cost must be finite and nonnegative, got {value}"
        );
        Finite(value)
    }

    /// Validating constructor: `f64::INFINITY` maps to `Infinite`, NaN and
    /// negative values are rejected.
    pub fn checked(value: f64) -> Option<Self> {
        if value.is_nan() || value < 0.0 {
            None
        } else if value.is_infinite() {
            Some(Infinite)
        } else {
            Some(Finite(value))
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Finite(_))
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Infinite)
    }

    pub fn finite_value(self) -> Option<f64> {
        match self {
            Finite(v) => Some(v),
            Infinite => None,
        }
    }

    /// The finite payload, or `f64::INFINITY`. Handy for printing and for
    /// comparisons against plain-float bounds.
    pub fn as_f64(self) -> f64 {
        match self {
            Finite(v) => v,
            Infinite => f64::INFINITY,
        }
    }

    /// Scales by a nonnegative finite factor; `∞` stays `∞` (the factor is
    /// required positive whenever it multiplies `∞`, which holds for the
    /// perturbation weights `δ > 0` this is used with).
    pub fn scaled(self, factor: f64) -> Self {
        debug_assert!(factor >= 0.0 && factor.is_finite());
        match self {
            Finite(v) => Finite(v * factor),
            Infinite => Infinite,
        }
    }

    /// Absolute difference with the residual conventions `|∞ − ∞| = 0` and
    /// `|∞ − finite| = ∞`. Used to measure violations of fixed-point
    /// equations where `∞` is a legitimate value on both sides.
    pub fn abs_gap(self, other: Self) -> Self {
        match (self, other) {
            (Finite(a), Finite(b)) => Finite((a - b).abs()),
            (Infinite, Infinite) => Finite(0.0),
            _ => Infinite,
        }
    }
}

impl Add for ExtendedCost {
    type Output = ExtendedCost;

    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (Finite(a), Finite(b)) => Finite(a + b),
            _ => Infinite,
        }
    }
}

impl Sum for ExtendedCost {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, Add::add)
    }
}

impl PartialEq for ExtendedCost {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Finite(a), Finite(b)) => a == b,
            (Infinite, Infinite) => true,
            _ => false,
        }
    }
}

// No NaN payloads by construction, so equality is reflexive.
impl Eq for ExtendedCost {}

impl PartialOrd for ExtendedCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedCost {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b).expect("no NaN costs"),
            (Finite(_), Infinite) => Ordering::Less,
            (Infinite, Finite(_)) => Ordering::Greater,
            (Infinite, Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ExtendedCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finite(v) => write!(f, "{v}"),
            Infinite => write!(f, "inf"),
        }
    }
}

// JSON wire form: finite costs are numbers, infinity is the string "inf".
impl Serialize for ExtendedCost {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Finite(v) => serializer.serialize_f64(*v),
            Infinite => serializer.serialize_str("inf"),
        }
    }
}

struct CostVisitor;

impl Visitor<'_> for CostVisitor {
    type Value = ExtendedCost;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a nonnegative number or the string \"inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
        ExtendedCost::checked(v)
            .ok_or_else(|| E::custom(format!("invalid cost {v}: must be >= 0 and not NaN")))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
        self.visit_f64(v as f64)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
        self.visit_f64(v as f64)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
        match v {
            "inf" | "Inf" | "infinity" | "Infinity" => Ok(Infinite),
            _ => Err(E::custom(format!("invalid cost string {v:?}, expected \"inf\""))),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedCost {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(CostVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn addition_saturates() {
        assert_eq!(Finite(1.5) + Finite(2.0), Finite(3.5));
        assert_eq!(Finite(1.5) + Infinite, Infinite);
        assert_eq!(Infinite + Finite(0.0), Infinite);
        assert_eq!(Infinite + Infinite, Infinite);
    }

    #[test]
    fn order_is_total_with_infinity_on_top() {
        assert!(Finite(0.0) < Finite(1.0));
        assert!(Finite(1e300) < Infinite);
        assert_eq!(Infinite.cmp(&Infinite), Ordering::Equal);
        assert_eq!([Infinite, Finite(2.0), Finite(1.0)].iter().min(), Some(&Finite(1.0)));
    }

    #[test]
    fn gap_conventions() {
        assert_eq!(Infinite.abs_gap(Infinite), Finite(0.0));
        assert_eq!(Infinite.abs_gap(Finite(3.0)), Infinite);
        assert_eq!(Finite(1.0).abs_gap(Finite(3.5)), Finite(2.5));
    }

    #[test]
    fn checked_rejects_bad_values() {
        assert!(ExtendedCost::checked(-1.0).is_none());
        assert!(ExtendedCost::checked(f64::NAN).is_none());
        assert_eq!(ExtendedCost::checked(f64::INFINITY), Some(Infinite));
    }

    #[test]
    fn json_round_trip() {
        let v: Vec<ExtendedCost> = serde_json::from_str(r#"[0, 1.5, "inf"]"#).unwrap();
        assert_eq!(v, vec![Finite(0.0), Finite(1.5), Infinite]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"[0.0,1.5,"inf"]"#);
        assert!(serde_json::from_str::<ExtendedCost>("-2").is_err());
    }
}
