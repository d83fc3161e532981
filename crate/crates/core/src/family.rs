//! Indexed function families: a sequence `{f_n}` of extended-real functions on
//! a metric point set, with an optional candidate limit.

use crate::extreal::ExtReal;
use crate::space::SpaceRef;
use std::sync::Arc;

pub type PointFn = Arc<dyn Fn(usize) -> ExtReal + Send + Sync>;
type FamilyFn = Arc<dyn Fn(usize, usize) -> ExtReal + Send + Sync>;

/// Horizons shorter than this cannot separate a tail from a head.
pub const MIN_HORIZON: usize = 8;

#[derive(Clone)]
pub struct FunctionFamily {
    space: SpaceRef,
    n_max: usize,
    eval: FamilyFn,
    limit_candidate: Option<PointFn>,
}

impl FunctionFamily {
    /// `eval(n, point)` must be total on `{1..=n_max} x points`.
    pub fn new(
        space: SpaceRef,
        n_max: usize,
        eval: impl Fn(usize, usize) -> ExtReal + Send + Sync + 'static,
    ) -> FunctionFamily {
        assert!(n_max >= MIN_HORIZON, "horizon must be at least {MIN_HORIZON}");
        FunctionFamily { space, n_max, eval: Arc::new(eval), limit_candidate: None }
    }

    pub fn with_limit(
        mut self,
        limit: impl Fn(usize) -> ExtReal + Send + Sync + 'static,
    ) -> FunctionFamily {
        self.limit_candidate = Some(Arc::new(limit));
        self
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Value of `f_n` at a point; `n` is 1-based.
    pub fn eval(&self, n: usize, point: usize) -> ExtReal {
        debug_assert!(n >= 1 && n <= self.n_max);
        (self.eval)(n, point)
    }

    pub fn limit_candidate(&self) -> Option<&PointFn> {
        self.limit_candidate.as_ref()
    }

    pub fn limit_at(&self, point: usize) -> Option<ExtReal> {
        self.limit_candidate.as_ref().map(|f| f(point))
    }

    /// First index of the tail window `{n_max/2 .. n_max}`.
    pub fn tail_start(&self) -> usize {
        self.n_max / 2
    }

    fn derived(
        &self,
        map: impl Fn(ExtReal) -> ExtReal + Send + Sync + 'static,
        map_limit: bool,
    ) -> FunctionFamily {
        let inner = self.eval.clone();
        let limit = if map_limit { self.limit_candidate.clone() } else { None };
        let map = Arc::new(map);
        let lm = map.clone();
        FunctionFamily {
            space: self.space.clone(),
            n_max: self.n_max,
            eval: Arc::new(move |n, p| map(inner(n, p))),
            limit_candidate: limit.map(|f| -> PointFn { Arc::new(move |p| lm(f(p))) }),
        }
    }

    pub fn negated(&self) -> FunctionFamily {
        self.derived(|v| v.neg(), true)
    }

    pub fn abs_value(&self) -> FunctionFamily {
        self.derived(|v| v.abs(), false)
    }

    pub fn positive_part(&self) -> FunctionFamily {
        self.derived(|v| v.pos_part(), false)
    }

    pub fn negative_part(&self) -> FunctionFamily {
        self.derived(|v| v.neg_part(), false)
    }

    /// Re-indexes so the shifted family starts at term `start` (1-based);
    /// the horizon shrinks accordingly.
    pub fn shifted(&self, start: usize) -> FunctionFamily {
        assert!(start >= 1 && self.n_max + 1 - start >= MIN_HORIZON);
        let inner = self.eval.clone();
        FunctionFamily {
            space: self.space.clone(),
            n_max: self.n_max + 1 - start,
            eval: Arc::new(move |n, p| inner(n + start - 1, p)),
            limit_candidate: self.limit_candidate.clone(),
        }
    }

    /// The constant family `{f, f, ...}` over the same horizon.
    pub fn constant(space: SpaceRef, n_max: usize, f: PointFn) -> FunctionFamily {
        let g = f.clone();
        FunctionFamily {
            space,
            n_max,
            eval: Arc::new(move |_, p| g(p)),
            limit_candidate: Some(f),
        }
    }

    /// True when `f_n(s) <= f_{n+1}(s)` everywhere (up to `slack`).
    pub fn is_pointwise_nondecreasing(&self, slack: f64) -> bool {
        for p in 0..self.space.len() {
            for n in 1..self.n_max {
                let a = self.eval(n, p);
                let b = self.eval(n + 1, p);
                let ok = match (a, b) {
                    (ExtReal::Finite(x), ExtReal::Finite(y)) => x <= y + slack,
                    _ => a <= b,
                };
                if !ok {
                    return false;
                }
            }
        }
        true
    }
}

impl std::fmt::Debug for FunctionFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionFamily")
            .field("space", &self.space.id())
            .field("n_max", &self.n_max)
            .field("has_limit", &self.limit_candidate.is_some())
            .finish()
    }
}
