//! Finite nonnegative atomic measures and the integral with the
//! definedness convention `min(int f+ dmu, int f- dmu) < +inf`.

use crate::extreal::ExtReal;
use crate::space::SpaceRef;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("weight {w} at point {index} is negative or not finite")]
    BadWeight { index: usize, w: f64 },
    #[error("expected {expected} weights for space `{space}`, got {got}")]
    WeightCount { space: String, expected: usize, got: usize },
    #[error("measures live on different spaces (`{a}` vs `{b}`)")]
    SpaceMismatch { a: String, b: String },
    #[error("integrand evaluated to NaN at point {index}")]
    EvalFailure { index: usize },
    #[error("serialized measure is malformed: {0}")]
    Parse(String),
}

/// Finite nonnegative measure given by one weight per point of a metric set.
/// Zero weights are kept, not pruned: set-indexed quantities must see them.
#[derive(Debug, Clone)]
pub struct AtomicMeasure {
    space: SpaceRef,
    weights: Vec<f64>,
}

impl AtomicMeasure {
    pub fn new(space: SpaceRef, weights: Vec<f64>) -> Result<AtomicMeasure, MeasureError> {
        if weights.len() != space.len() {
            return Err(MeasureError::WeightCount {
                space: space.id().to_string(),
                expected: space.len(),
                got: weights.len(),
            });
        }
        for (index, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(MeasureError::BadWeight { index, w });
            }
        }
        Ok(AtomicMeasure { space, weights })
    }

    /// Unit mass at a single point.
    pub fn dirac(space: SpaceRef, point: usize) -> AtomicMeasure {
        let mut weights = vec![0.0; space.len()];
        weights[point] = 1.0;
        AtomicMeasure { space, weights }
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, point: usize) -> f64 {
        self.weights[point]
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Mass of a point subset.
    pub fn mass_of(&self, points: &[usize]) -> f64 {
        points.iter().map(|&p| self.weights[p]).sum()
    }

    pub fn same_space(&self, other: &AtomicMeasure) -> bool {
        Arc::ptr_eq(&self.space, &other.space) || self.space.id() == other.space.id()
    }
}

/// Outcome of integration: a value in `[-inf, +inf]`, or undefined when both
/// the positive-part and negative-part integrals are `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralValue {
    Defined(ExtReal),
    Undefined,
}

impl IntegralValue {
    pub fn defined(self) -> Option<ExtReal> {
        match self {
            IntegralValue::Defined(v) => Some(v),
            IntegralValue::Undefined => None,
        }
    }

    pub fn expect_defined(self, what: &str) -> ExtReal {
        self.defined()
            .unwrap_or_else(|| panic!("integral `{what}` is undefined"))
    }
}

/// Integrates `f` against `mu` by splitting into positive and negative parts.
///
/// Atoms of weight zero contribute nothing even where `f = +-inf`
/// (the convention `0 * inf = 0`). Returns `Undefined` when both part
/// integrals are `+inf`; a NaN evaluation is an input error, distinct from
/// undefinedness.
pub fn integrate(
    f: &dyn Fn(usize) -> ExtReal,
    mu: &AtomicMeasure,
) -> Result<IntegralValue, MeasureError> {
    let mut pos = ExtReal::ZERO;
    let mut neg = ExtReal::ZERO;
    for (index, &w) in mu.weights().iter().enumerate() {
        let v = f(index);
        if let ExtReal::Finite(x) = v {
            if x.is_nan() {
                return Err(MeasureError::EvalFailure { index });
            }
        }
        pos = pos
            .checked_add(v.pos_part().scale_by_weight(w))
            .expect("nonnegative sum is always defined");
        neg = neg
            .checked_add(v.neg_part().scale_by_weight(w))
            .expect("nonnegative sum is always defined");
    }
    if pos == ExtReal::PosInf && neg == ExtReal::PosInf {
        return Ok(IntegralValue::Undefined);
    }
    Ok(IntegralValue::Defined(
        pos.checked_sub(neg).expect("one side is finite"),
    ))
}

/// Total variation distance: the sup over measurable `f: S -> [-1,1]` of
/// `|int f dmu - int f dnu|`, which on atoms is the absolute weight-difference sum.
pub fn total_variation_distance(
    mu: &AtomicMeasure,
    nu: &AtomicMeasure,
) -> Result<f64, MeasureError> {
    if !mu.same_space(nu) {
        return Err(MeasureError::SpaceMismatch {
            a: mu.space().id().to_string(),
            b: nu.space().id().to_string(),
        });
    }
    Ok(mu
        .weights()
        .iter()
        .zip(nu.weights())
        .map(|(a, b)| (a - b).abs())
        .sum())
}

/// Wire form of a measure. Weights travel as decimal strings (shortest
/// round-trip formatting) so reports do not drift across platforms.
#[derive(Debug, Serialize, Deserialize)]
pub struct MeasureDocument {
    pub schema_version: u32,
    pub space_id: String,
    pub points: Vec<String>,
    pub weights: Vec<String>,
}

pub const MEASURE_SCHEMA_VERSION: u32 = 1;

impl AtomicMeasure {
    pub fn to_document(&self) -> MeasureDocument {
        let points = (0..self.space.len())
            .map(|i| match self.space.coord(i) {
                Some(c) => format!("{c:?}"),
                None => format!("p{i}"),
            })
            .collect();
        MeasureDocument {
            schema_version: MEASURE_SCHEMA_VERSION,
            space_id: self.space.id().to_string(),
            points,
            weights: self.weights.iter().map(|w| format!("{w:?}")).collect(),
        }
    }

    pub fn from_document(doc: &MeasureDocument, space: SpaceRef) -> Result<AtomicMeasure, MeasureError> {
        if doc.space_id != space.id() {
            return Err(MeasureError::SpaceMismatch {
                a: doc.space_id.clone(),
                b: space.id().to_string(),
            });
        }
        let weights = doc
            .weights
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| MeasureError::Parse(e.to_string())))
            .collect::<Result<Vec<f64>, _>>()?;
        AtomicMeasure::new(space, weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::MetricPointSet;
    use proptest::prelude::*;

    fn four_points() -> SpaceRef {
        MetricPointSet::euclidean_line("s4", vec![0.0, 1.0, 2.0, 3.0]).unwrap()
    }

    #[test]
    fn zero_function_integrates_to_zero() {
        let mu = AtomicMeasure::new(four_points(), vec![0.3, 0.1, 0.4, 0.2]).unwrap();
        let v = integrate(&|_| ExtReal::ZERO, &mu).unwrap();
        assert_eq!(v, IntegralValue::Defined(ExtReal::ZERO));
    }

    #[test]
    fn unit_function_recovers_total_mass() {
        let mu = AtomicMeasure::new(four_points(), vec![0.25; 4]).unwrap();
        let v = integrate(&|_| ExtReal::new(1.0), &mu).unwrap();
        assert_eq!(v.expect_defined("unit"), ExtReal::new(1.0));
    }

    #[test]
    fn opposite_infinite_parts_are_undefined() {
        let s = MetricPointSet::euclidean_line("s2", vec![0.0, 1.0]).unwrap();
        let mu = AtomicMeasure::new(s, vec![0.5, 0.5]).unwrap();
        let f = |i: usize| if i == 0 { ExtReal::PosInf } else { ExtReal::NegInf };
        assert_eq!(integrate(&f, &mu).unwrap(), IntegralValue::Undefined);
    }

    #[test]
    fn zero_weight_atom_ignores_infinite_value() {
        let s = MetricPointSet::euclidean_line("s2", vec![0.0, 1.0]).unwrap();
        let mu = AtomicMeasure::new(s, vec![0.0, 1.0]).unwrap();
        let f = |i: usize| if i == 0 { ExtReal::NegInf } else { ExtReal::new(2.0) };
        assert_eq!(
            integrate(&f, &mu).unwrap().expect_defined("t"),
            ExtReal::new(2.0)
        );
    }

    #[test]
    fn nan_evaluation_is_an_input_error_not_undefined() {
        let s = MetricPointSet::euclidean_line("s2", vec![0.0, 1.0]).unwrap();
        let mu = AtomicMeasure::new(s, vec![0.5, 0.5]).unwrap();
        let f = |_: usize| ExtReal::Finite(f64::NAN);
        assert!(matches!(
            integrate(&f, &mu),
            Err(MeasureError::EvalFailure { .. })
        ));
    }

    #[test]
    fn tv_distance_matches_hand_cases() {
        let s = MetricPointSet::euclidean_line("s2", vec![0.0, 1.0]).unwrap();
        let mu = AtomicMeasure::new(s.clone(), vec![0.7, 0.3]).unwrap();
        let nu = AtomicMeasure::new(s.clone(), vec![0.5, 0.5]).unwrap();
        assert!((total_variation_distance(&mu, &nu).unwrap() - 0.4).abs() < 1e-15);

        let d1 = AtomicMeasure::dirac(s.clone(), 0);
        let d2 = AtomicMeasure::dirac(s, 1);
        assert_eq!(total_variation_distance(&d1, &d2).unwrap(), 2.0);
        assert_eq!(total_variation_distance(&d1, &d1).unwrap(), 0.0);
    }

    /// Independent oracle for the two-atom TV example: enumerate every sign
    /// pattern of f over the atoms and maximize the integral gap directly.
    #[test]
    fn tv_on_two_atoms_matches_sign_pattern_enumeration() {
        let s = MetricPointSet::euclidean_line("s2", vec![0.0, 1.0]).unwrap();
        let mu = AtomicMeasure::new(s.clone(), vec![0.7, 0.3]).unwrap();
        let nu = AtomicMeasure::new(s, vec![0.5, 0.5]).unwrap();
        let mut best: f64 = 0.0;
        for mask in 0..4u32 {
            let f = |i: usize| if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
            let gap: f64 = (0..2)
                .map(|i| f(i) * (mu.weight(i) - nu.weight(i)))
                .sum();
            best = best.max(gap.abs());
        }
        assert!((best - total_variation_distance(&mu, &nu).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        let a = MetricPointSet::euclidean_line("a", vec![0.0, 1.0]).unwrap();
        let b = MetricPointSet::euclidean_line("b", vec![0.0, 1.0]).unwrap();
        let mu = AtomicMeasure::new(a, vec![1.0, 0.0]).unwrap();
        let nu = AtomicMeasure::new(b, vec![1.0, 0.0]).unwrap();
        assert!(total_variation_distance(&mu, &nu).is_err());
    }

    #[test]
    fn empty_and_simple_total_mass() {
        let s = MetricPointSet::euclidean_line("s2", vec![0.0, 1.0]).unwrap();
        let zero = AtomicMeasure::new(s.clone(), vec![0.0, 0.0]).unwrap();
        assert_eq!(zero.total_mass(), 0.0);
        let mu = AtomicMeasure::new(s, vec![0.25, 0.75]).unwrap();
        assert_eq!(mu.total_mass(), 1.0);
    }

    #[test]
    fn document_round_trip() {
        let s = four_points();
        let mu = AtomicMeasure::new(s.clone(), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let doc = mu.to_document();
        let back = AtomicMeasure::from_document(&doc, s).unwrap();
        assert_eq!(mu.weights(), back.weights());
    }

    proptest! {
        /// TV distance is a metric on measures sharing a space.
        #[test]
        fn tv_is_a_metric(
            a in proptest::collection::vec(0.0..1.0f64, 4),
            b in proptest::collection::vec(0.0..1.0f64, 4),
            c in proptest::collection::vec(0.0..1.0f64, 4),
        ) {
            let s = four_points();
            let ma = AtomicMeasure::new(s.clone(), a).unwrap();
            let mb = AtomicMeasure::new(s.clone(), b).unwrap();
            let mc = AtomicMeasure::new(s, c).unwrap();
            let dab = total_variation_distance(&ma, &mb).unwrap();
            let dba = total_variation_distance(&mb, &ma).unwrap();
            let dac = total_variation_distance(&ma, &mc).unwrap();
            let dcb = total_variation_distance(&mc, &mb).unwrap();
            prop_assert!((dab - dba).abs() < 1e-12);
            prop_assert!(dab <= dac + dcb + 1e-12);
            prop_assert_eq!(total_variation_distance(&ma, &ma).unwrap(), 0.0);
        }

        /// For probability masses, TV distance equals twice the maximal
        /// set-mass gap; checked by exhaustive subset enumeration.
        #[test]
        fn tv_equals_twice_max_subset_gap(
            raw_a in proptest::collection::vec(0.01..1.0f64, 4),
            raw_b in proptest::collection::vec(0.01..1.0f64, 4),
        ) {
            let s = four_points();
            let ta: f64 = raw_a.iter().sum();
            let tb: f64 = raw_b.iter().sum();
            let a: Vec<f64> = raw_a.iter().map(|x| x / ta).collect();
            let b: Vec<f64> = raw_b.iter().map(|x| x / tb).collect();
            let ma = AtomicMeasure::new(s.clone(), a).unwrap();
            let mb = AtomicMeasure::new(s, b).unwrap();
            let tv = total_variation_distance(&ma, &mb).unwrap();
            let mut max_gap: f64 = 0.0;
            for mask in 0..16u32 {
                let set: Vec<usize> = (0..4).filter(|i| mask >> i & 1 == 1).collect();
                max_gap = max_gap.max((ma.mass_of(&set) - mb.mass_of(&set)).abs());
            }
            prop_assert!((tv - 2.0 * max_gap).abs() < 1e-12);
        }

        /// Bounded integrands always produce defined integrals, and integration
        /// is additive over disjoint support splits.
        #[test]
        fn bounded_integrands_are_defined_and_additive(
            w in proptest::collection::vec(0.0..2.0f64, 4),
            v in proptest::collection::vec(-5.0..5.0f64, 4),
        ) {
            let s = four_points();
            let mu = AtomicMeasure::new(s.clone(), w.clone()).unwrap();
            let f = |i: usize| ExtReal::new(v[i]);
            let whole = integrate(&f, &mu).unwrap().defined();
            prop_assert!(whole.is_some());

            let left = AtomicMeasure::new(s.clone(), vec![w[0], w[1], 0.0, 0.0]).unwrap();
            let right = AtomicMeasure::new(s, vec![0.0, 0.0, w[2], w[3]]).unwrap();
            let a = integrate(&f, &left).unwrap().defined().unwrap().finite().unwrap();
            let b = integrate(&f, &right).unwrap().defined().unwrap().finite().unwrap();
            let total = whole.unwrap().finite().unwrap();
            prop_assert!((a + b - total).abs() < 1e-9);
        }
    }
}
