//! Finite metric point sets.
//!
//! Points are opaque indices into the set; the metric is stored as an explicit
//! distance matrix so non-Euclidean metrics (mixed Euclidean/discrete parts,
//! interleaved tagged grids) are representable. An optional one-dimensional
//! embedding coordinate per point is carried for display and for building
//! coordinate-based test functions.

use std::sync::Arc;
use thiserror::Error;

/// Exhaustive triangle-inequality validation is cubic; skip above this size.
const TRIANGLE_CHECK_LIMIT: usize = 200;

#[derive(Debug, Error, PartialEq)]
pub enum SpaceError {
    #[error("distance matrix must be {n}x{n}, got {got} entries")]
    BadShape { n: usize, got: usize },
    #[error("distance({i},{j}) = {d} is negative or NaN")]
    BadDistance { i: usize, j: usize, d: f64 },
    #[error("distance({i},{i}) must be 0, got {d}")]
    NonzeroDiagonal { i: usize, d: f64 },
    #[error("distance({i},{j}) = 0 for distinct points")]
    IndistinctPoints { i: usize, j: usize },
    #[error("distance not symmetric at ({i},{j})")]
    Asymmetric { i: usize, j: usize },
    #[error("triangle inequality fails on ({i},{j},{k})")]
    Triangle { i: usize, j: usize, k: usize },
    #[error("point set must be nonempty")]
    Empty,
}

#[derive(Debug, Clone)]
pub struct MetricPointSet {
    id: String,
    len: usize,
    dist: Vec<f64>,
    coords: Option<Vec<f64>>,
}

pub type SpaceRef = Arc<MetricPointSet>;

impl MetricPointSet {
    /// Builds and validates a point set from an explicit metric.
    pub fn new(
        id: impl Into<String>,
        len: usize,
        metric: impl Fn(usize, usize) -> f64,
        coords: Option<Vec<f64>>,
    ) -> Result<SpaceRef, SpaceError> {
        let mut dist = vec![0.0; len * len];
        for i in 0..len {
            for j in 0..len {
                dist[i * len + j] = metric(i, j);
            }
        }
        Self::from_matrix(id, len, dist, coords)
    }

    pub fn from_matrix(
        id: impl Into<String>,
        len: usize,
        dist: Vec<f64>,
        coords: Option<Vec<f64>>,
    ) -> Result<SpaceRef, SpaceError> {
        if len == 0 {
            return Err(SpaceError::Empty);
        }
        if dist.len() != len * len {
            return Err(SpaceError::BadShape { n: len, got: dist.len() });
        }
        let at = |i: usize, j: usize| dist[i * len + j];
        for i in 0..len {
            if at(i, i) != 0.0 {
                return Err(SpaceError::NonzeroDiagonal { i, d: at(i, i) });
            }
            for j in 0..len {
                let d = at(i, j);
                if d.is_nan() || d < 0.0 {
                    return Err(SpaceError::BadDistance { i, j, d });
                }
                if i != j && d == 0.0 {
                    return Err(SpaceError::IndistinctPoints { i, j });
                }
                if d != at(j, i) {
                    return Err(SpaceError::Asymmetric { i, j });
                }
            }
        }
        if len <= TRIANGLE_CHECK_LIMIT {
            for i in 0..len {
                for j in 0..len {
                    for k in 0..len {
                        // Small slack for float round-off in derived metrics.
                        if at(i, j) > at(i, k) + at(k, j) + 1e-12 {
                            return Err(SpaceError::Triangle { i, j, k });
                        }
                    }
                }
            }
        }
        Ok(Arc::new(MetricPointSet { id: id.into(), len, dist, coords }))
    }

    /// Points on the real line with the Euclidean metric.
    pub fn euclidean_line(id: impl Into<String>, coords: Vec<f64>) -> Result<SpaceRef, SpaceError> {
        let c = coords.clone();
        Self::new(id, c.len(), |i, j| (c[i] - c[j]).abs(), Some(coords))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.len + j]
    }

    /// Display coordinate of a point, when an embedding is attached.
    pub fn coord(&self, i: usize) -> Option<f64> {
        self.coords.as_ref().map(|c| c[i])
    }

    pub fn coords(&self) -> Option<&[f64]> {
        self.coords.as_deref()
    }

    /// Open ball: indices strictly within `radius` of `center` (includes the center).
    pub fn ball(&self, center: usize, radius: f64) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&j| self.distance(center, j) < radius)
    }

    /// Smallest distance between distinct points.
    pub fn min_positive_distance(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..self.len {
            for j in (i + 1)..self.len {
                m = m.min(self.distance(i, j));
            }
        }
        m
    }

    pub fn diameter(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.len {
            for j in (i + 1)..self.len {
                m = m.max(self.distance(i, j));
            }
        }
        m
    }
}

/// Strictly decreasing positive ball radii, the finite stand-in for `delta -> 0`.
#[derive(Debug, Clone)]
pub struct RadiusSchedule {
    radii: Vec<f64>,
}

impl RadiusSchedule {
    pub fn new(radii: Vec<f64>) -> RadiusSchedule {
        assert!(!radii.is_empty(), "radius schedule must be nonempty");
        for w in radii.windows(2) {
            assert!(w[0] > w[1], "radii must be strictly decreasing");
        }
        assert!(*radii.last().unwrap() > 0.0, "radii must be positive");
        RadiusSchedule { radii }
    }

    /// Halving schedule from `start` down to the first value `<= floor`.
    pub fn halving(start: f64, floor: f64) -> RadiusSchedule {
        assert!(start > 0.0 && floor > 0.0 && start >= floor);
        let mut radii = vec![start];
        let mut r = start;
        while r > floor {
            r /= 2.0;
            radii.push(r);
        }
        RadiusSchedule::new(radii)
    }

    /// Schedule resolving the space down to single points: finest radius is at
    /// (or just below) the minimal inter-point spacing, so the smallest open
    /// ball is a singleton.
    pub fn fine_for(space: &MetricPointSet) -> RadiusSchedule {
        let spacing = space.min_positive_distance();
        let start = (space.diameter() / 2.0).max(spacing * 2.0);
        RadiusSchedule::halving(start, spacing)
    }

    /// Schedule whose finest ball still contains nearest neighbours: the floor
    /// sits at twice the minimal spacing. A grid of resolution `R` can witness
    /// continuum-scale violations only at radii above its spacing; this is the
    /// schedule to use when probing for expected failures.
    pub fn coarse_for(space: &MetricPointSet) -> RadiusSchedule {
        let spacing = space.min_positive_distance();
        let floor = spacing * 2.0;
        let start = (space.diameter() / 2.0).max(floor * 2.0);
        RadiusSchedule::halving(start, floor)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn finest(&self) -> f64 {
        *self.radii.last().unwrap()
    }
}

/// Dyadic tolerance sweep `1, 1/2, ..., 2^-10`, matching the counterexample
/// scales of the worked fixtures (witnesses live at eps = 1/2).
pub fn default_eps_schedule() -> Vec<f64> {
    (0..=10).map(|k| (2.0f64).powi(-k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_line_is_a_metric() {
        let s = MetricPointSet::euclidean_line("g", vec![0.0, 0.25, 0.5, 1.0]).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.distance(0, 3), 1.0);
        assert_eq!(s.min_positive_distance(), 0.25);
    }

    #[test]
    fn zero_distance_between_distinct_points_is_rejected() {
        let err = MetricPointSet::euclidean_line("g", vec![0.0, 0.0]).unwrap_err();
        assert_eq!(err, SpaceError::IndistinctPoints { i: 0, j: 1 });
    }

    #[test]
    fn triangle_violation_is_caught() {
        let d = vec![0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0];
        let err = MetricPointSet::from_matrix("bad", 3, d, None).unwrap_err();
        assert!(matches!(err, SpaceError::Triangle { .. }));
    }

    #[test]
    fn open_ball_is_strict_and_contains_center() {
        let s = MetricPointSet::euclidean_line("g", vec![0.0, 1.0, 2.0]).unwrap();
        let b: Vec<usize> = s.ball(1, 1.0).collect();
        assert_eq!(b, vec![1]);
        let b: Vec<usize> = s.ball(1, 1.5).collect();
        assert_eq!(b, vec![0, 1, 2]);
    }

    #[test]
    fn radius_schedules_are_decreasing() {
        let r = RadiusSchedule::halving(0.5, 0.01);
        assert!(r.finest() <= 0.01);
        for w in r.radii().windows(2) {
            assert!(w[0] > w[1]);
        }
    }
}
