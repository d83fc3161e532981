//! Diagnostics for the three convergence modes of measure sequences
//! (weak / setwise / total variation) and the uniform-integrability estimators.
//!
//! Every "as n -> infinity" statement is rendered over a finite horizon: a
//! limit claim passes when it holds within tolerance over the last quarter of
//! the horizon, and tail quantities (liminf/limsup renderings) range over
//! indices `>= n_max/2`. Horizon and tolerance are recorded in each verdict.

use crate::extreal::ExtReal;
use crate::family::{FunctionFamily, PointFn, MIN_HORIZON};
use crate::measure::{integrate, total_variation_distance, AtomicMeasure, MeasureError};
use crate::space::SpaceRef;
use crate::verdict::Verdict;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConvergenceError {
    #[error("measure sequence needs at least {MIN_HORIZON} terms, got {0}")]
    HorizonTooShort(usize),
    #[error("term {index} does not live on the sequence space")]
    TermSpaceMismatch { index: usize },
    #[error("weak convergence check needs a nonempty test family")]
    EmptyTestFamily,
    #[error("K schedule must be nonempty and ascending")]
    BadKSchedule,
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// A truncated sequence of measures `{mu_n}` with its candidate limit `mu`.
#[derive(Debug, Clone)]
pub struct MeasureSequence {
    space: SpaceRef,
    terms: Vec<AtomicMeasure>,
    limit: AtomicMeasure,
}

impl MeasureSequence {
    pub fn new(
        space: SpaceRef,
        terms: Vec<AtomicMeasure>,
        limit: AtomicMeasure,
    ) -> Result<MeasureSequence, ConvergenceError> {
        if terms.len() < MIN_HORIZON {
            return Err(ConvergenceError::HorizonTooShort(terms.len()));
        }
        for (index, t) in terms.iter().chain(std::iter::once(&limit)).enumerate() {
            if !t.same_space(&limit) || t.space().id() != space.id() {
                return Err(ConvergenceError::TermSpaceMismatch { index });
            }
        }
        Ok(MeasureSequence { space, terms, limit })
    }

    pub fn from_generator(
        space: SpaceRef,
        n_max: usize,
        term: impl Fn(usize) -> AtomicMeasure,
        limit: AtomicMeasure,
    ) -> Result<MeasureSequence, ConvergenceError> {
        let terms = (1..=n_max).map(term).collect();
        MeasureSequence::new(space, terms, limit)
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn n_max(&self) -> usize {
        self.terms.len()
    }

    /// `mu_n`, 1-based.
    pub fn term(&self, n: usize) -> &AtomicMeasure {
        &self.terms[n - 1]
    }

    pub fn limit(&self) -> &AtomicMeasure {
        &self.limit
    }

    pub fn tail_start(&self) -> usize {
        self.n_max() / 2
    }

    /// First index of the last quarter of the horizon.
    pub fn last_quarter_start(&self) -> usize {
        self.n_max() - self.n_max() / 4 + 1
    }
}

/// A named bounded test function; continuity is caller-asserted.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    pub eval: PointFn,
}

impl TestFunction {
    pub fn new(name: impl Into<String>, eval: impl Fn(usize) -> ExtReal + Send + Sync + 'static) -> Self {
        TestFunction { name: name.into(), eval: Arc::new(eval) }
    }
}

/// Default surrogate family for weak convergence: monomials of the embedding
/// coordinate up to degree 3, plus seeded random Lipschitz bumps, all with
/// sup-norm at most 1. A finite family cannot be conclusive; verdicts flag it.
pub fn default_test_functions(space: &SpaceRef, seed: u64) -> Vec<TestFunction> {
    let coords: Vec<f64> = (0..space.len())
        .map(|i| space.coord(i).unwrap_or(i as f64))
        .collect();
    let lo = coords.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = coords.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-12);
    // Normalized coordinate in [0,1] keeps all monomials bounded by 1.
    let norm: Arc<Vec<f64>> = Arc::new(coords.iter().map(|c| (c - lo) / span).collect());

    let mut tests = Vec::new();
    for deg in 0..=3usize {
        let norm = norm.clone();
        tests.push(TestFunction::new(format!("monomial_deg{deg}"), move |p| {
            ExtReal::new(norm[p].powi(deg as i32))
        }));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..8 {
        let center: f64 = rng.gen_range(0.0..1.0);
        let slope: f64 = rng.gen_range(1.0..8.0);
        let norm = norm.clone();
        tests.push(TestFunction::new(format!("bump{k}"), move |p| {
            ExtReal::new((1.0 - slope * (norm[p] - center).abs()).max(0.0))
        }));
    }
    tests
}

fn integral_f64(f: &PointFn, mu: &AtomicMeasure) -> Result<f64, MeasureError> {
    Ok(integrate(&|p| f(p), mu)?.expect_defined("bounded test integral").to_f64())
}

/// Weak convergence against a finite test family, plus the total-mass check
/// that weak convergence of finite measures implies.
pub fn weak_convergence_check(
    seq: &MeasureSequence,
    tests: &[TestFunction],
    tol: f64,
) -> Result<Verdict, ConvergenceError> {
    if tests.is_empty() {
        return Err(ConvergenceError::EmptyTestFamily);
    }
    let mut v = Verdict::new("weak_convergence", seq.n_max(), tol);
    v.assumption("test functions are bounded and continuous (caller-asserted)");
    v.note("pass is relative to the declared surrogate test family");
    let from = seq.last_quarter_start();
    let mut all_ok = true;
    let mut worst: f64 = 0.0;
    for t in tests {
        let target = integral_f64(&t.eval, seq.limit())?;
        let mut gap: f64 = 0.0;
        for n in from..=seq.n_max() {
            gap = gap.max((integral_f64(&t.eval, seq.term(n))? - target).abs());
        }
        let ok = gap <= tol;
        all_ok &= ok;
        worst = worst.max(gap);
        v.hypothesis(format!("test `{}` converges", t.name), ok);
    }
    let mass_target = seq.limit().total_mass();
    let mut mass_gap: f64 = 0.0;
    for n in from..=seq.n_max() {
        mass_gap = mass_gap.max((seq.term(n).total_mass() - mass_target).abs());
    }
    let mass_ok = mass_gap <= tol;
    v.hypothesis("total mass converges", mass_ok);
    v.quantity_f("max_test_gap", worst);
    v.quantity_f("max_mass_gap", mass_gap);
    v.settle_diagnostic(all_ok && mass_ok);
    Ok(v)
}

/// Singleton sets plus seeded random subsets: the default set family for the
/// setwise check.
pub fn default_set_family(space: &SpaceRef, seed: u64) -> Vec<Vec<usize>> {
    let mut sets: Vec<Vec<usize>> = (0..space.len()).map(|p| vec![p]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..64 {
        let set: Vec<usize> = (0..space.len()).filter(|_| rng.gen_bool(0.5)).collect();
        sets.push(set);
    }
    sets
}

pub fn setwise_convergence_check(
    seq: &MeasureSequence,
    sets: Option<&[Vec<usize>]>,
    tol: f64,
) -> Result<Verdict, ConvergenceError> {
    let default_sets;
    let sets = match sets {
        Some(s) => s,
        None => {
            default_sets = default_set_family(seq.space(), 0);
            &default_sets
        }
    };
    let mut v = Verdict::new("setwise_convergence", seq.n_max(), tol);
    let from = seq.last_quarter_start();
    let mut worst: f64 = 0.0;
    for set in sets {
        let target = seq.limit().mass_of(set);
        for n in from..=seq.n_max() {
            worst = worst.max((seq.term(n).mass_of(set) - target).abs());
        }
    }
    v.quantity_f("max_set_gap", worst);
    v.settle_diagnostic(worst <= tol);
    Ok(v)
}

pub fn tv_convergence_check(seq: &MeasureSequence, tol: f64) -> Result<Verdict, ConvergenceError> {
    let mut v = Verdict::new("tv_convergence", seq.n_max(), tol);
    let from = seq.last_quarter_start();
    let mut worst: f64 = 0.0;
    for n in from..=seq.n_max() {
        worst = worst.max(total_variation_distance(seq.term(n), seq.limit())?);
    }
    let final_d = total_variation_distance(seq.term(seq.n_max()), seq.limit())?;
    v.quantity_f("max_tail_distance", worst);
    v.quantity_f("final_distance", final_d);
    v.settle_diagnostic(worst <= tol);
    Ok(v)
}

/// Which indices the tail integral estimator ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UiMode {
    /// sup over all n — uniform integrability.
    Ui,
    /// max over the tail n >= n_max/2 — the limsup rendering, asymptotic u.i.
    Aui,
}

/// Tail-integral curve `K -> sup_n int |f_n| I{|f_n| >= K} dmu_n`.
#[derive(Debug, Clone)]
pub struct UiCurve {
    pub k_values: Vec<f64>,
    pub tail_values: Vec<f64>,
    pub mode: UiMode,
}

impl UiCurve {
    /// The estimator of the `K -> infinity` limit: the curve's final value.
    pub fn final_value(&self) -> f64 {
        *self.tail_values.last().unwrap()
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.final_value() <= tol
    }

    /// The integrand shrinks pointwise as K grows, so the curve never rises.
    pub fn is_nonincreasing(&self) -> bool {
        self.tail_values.windows(2).all(|w| w[0] >= w[1] - 1e-12)
    }
}

/// Geometric sweep `2^0 .. 2^20`, covering every fixture scale.
pub fn default_k_schedule() -> Vec<f64> {
    (0..=20).map(|k| (2.0f64).powi(k)).collect()
}

fn ui_curve(
    fam: &FunctionFamily,
    seq: &MeasureSequence,
    k_schedule: &[f64],
    mode: UiMode,
) -> Result<UiCurve, ConvergenceError> {
    if k_schedule.is_empty() || k_schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConvergenceError::BadKSchedule);
    }
    let n_max = fam.n_max().min(seq.n_max());
    let from = match mode {
        UiMode::Ui => 1,
        UiMode::Aui => n_max / 2,
    };
    let mut tail_values = Vec::with_capacity(k_schedule.len());
    for &k in k_schedule {
        let mut worst: f64 = 0.0;
        for n in from..=n_max {
            let val = integrate(
                &|p| {
                    let a = fam.eval(n, p).abs();
                    if a >= ExtReal::new(k) { a } else { ExtReal::ZERO }
                },
                seq.term(n),
            )?
            .expect_defined("nonnegative tail integral");
            worst = worst.max(val.to_f64());
        }
        tail_values.push(worst);
    }
    Ok(UiCurve { k_values: k_schedule.to_vec(), tail_values, mode })
}

/// Asymptotic uniform integrability estimator: tail max over `n >= n_max/2`.
pub fn aui_estimate(
    fam: &FunctionFamily,
    seq: &MeasureSequence,
    k_schedule: &[f64],
) -> Result<UiCurve, ConvergenceError> {
    ui_curve(fam, seq, k_schedule, UiMode::Aui)
}

/// Uniform integrability estimator: sup over all `n`.
pub fn ui_estimate(
    fam: &FunctionFamily,
    seq: &MeasureSequence,
    k_schedule: &[f64],
) -> Result<UiCurve, ConvergenceError> {
    ui_curve(fam, seq, k_schedule, UiMode::Ui)
}

/// Finite rendering of the u.i./a.u.i. equivalence: a.u.i. holds iff some
/// tail of the sequence is u.i. Searches the smallest shift `N <= n_max/2`
/// whose shifted family passes the u.i. estimate.
pub fn ui_aui_equivalence_probe(
    fam: &FunctionFamily,
    seq: &MeasureSequence,
    k_schedule: &[f64],
    tol: f64,
) -> Result<Verdict, ConvergenceError> {
    let mut v = Verdict::new("ui_aui_equivalence", fam.n_max(), tol);
    let aui = aui_estimate(fam, seq, k_schedule)?;
    let aui_pass = aui.passes(tol);
    v.quantity_f("aui_final_value", aui.final_value());

    let mut found: Option<usize> = None;
    for start in 1..=fam.n_max() / 2 {
        let shifted_fam = fam.shifted(start);
        let shifted_terms: Vec<AtomicMeasure> =
            (start..=seq.n_max()).map(|n| seq.term(n).clone()).collect();
        let shifted_seq =
            MeasureSequence::new(seq.space().clone(), shifted_terms, seq.limit().clone())?;
        let ui = ui_estimate(&shifted_fam, &shifted_seq, k_schedule)?;
        if ui.passes(tol) {
            found = Some(start);
            break;
        }
    }
    match found {
        Some(n) => {
            v.quantity_f("smallest_ui_tail_index", n as f64);
        }
        None => {
            v.note("no tail index up to n_max/2 yields a u.i. family");
        }
    }
    v.hypothesis("aui_pass_iff_some_tail_ui", aui_pass == found.is_some());
    v.settle_theorem(aui_pass == found.is_some());
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::MetricPointSet;

    fn line(n: usize) -> SpaceRef {
        MetricPointSet::euclidean_line("line", (0..n).map(|i| i as f64 / n as f64).collect())
            .unwrap()
    }

    fn constant_seq(space: SpaceRef, n_max: usize) -> MeasureSequence {
        let w = vec![1.0 / space.len() as f64; space.len()];
        let mu = AtomicMeasure::new(space.clone(), w).unwrap();
        MeasureSequence::from_generator(space, n_max, |_| mu.clone(), mu.clone()).unwrap()
    }

    #[test]
    fn constant_sequence_passes_every_mode() {
        let s = line(8);
        let seq = constant_seq(s.clone(), 16);
        let tests = default_test_functions(&s, 1);
        assert_eq!(
            weak_convergence_check(&seq, &tests, 1e-12).unwrap().status,
            crate::verdict::Status::Pass
        );
        assert_eq!(
            setwise_convergence_check(&seq, None, 1e-12).unwrap().status,
            crate::verdict::Status::Pass
        );
        let tv = tv_convergence_check(&seq, 1e-12).unwrap();
        assert_eq!(tv.status, crate::verdict::Status::Pass);
        assert_eq!(tv.get("final_distance").unwrap(), ExtReal::ZERO);
    }

    #[test]
    fn two_atom_mass_leak_converges_in_tv() {
        // mu_n = (1 - 1/n) delta_a + (1/n) delta_b, with TV distance 2/n.
        let s = line(2);
        let limit = AtomicMeasure::dirac(s.clone(), 0);
        let seq = MeasureSequence::from_generator(
            s,
            32,
            |n| {
                AtomicMeasure::new(
                    limit.space().clone(),
                    vec![1.0 - 1.0 / n as f64, 1.0 / n as f64],
                )
                .unwrap()
            },
            limit.clone(),
        )
        .unwrap();
        let d = total_variation_distance(seq.term(4), seq.limit()).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        let v = tv_convergence_check(&seq, 0.1).unwrap();
        assert_eq!(v.status, crate::verdict::Status::Pass);
        let strict = tv_convergence_check(&seq, 1e-6).unwrap();
        assert_eq!(strict.status, crate::verdict::Status::Fail);
    }

    #[test]
    fn empty_test_family_is_an_input_error() {
        let s = line(4);
        let seq = constant_seq(s, 8);
        assert!(matches!(
            weak_convergence_check(&seq, &[], 1e-9),
            Err(ConvergenceError::EmptyTestFamily)
        ));
    }

    #[test]
    fn bounded_family_curve_vanishes_past_the_bound() {
        let s = line(4);
        let seq = constant_seq(s.clone(), 16);
        let fam = FunctionFamily::new(s, 16, |_, p| ExtReal::new(3.0 - p as f64));
        let ks = default_k_schedule();
        let curve = ui_estimate(&fam, &seq, &ks).unwrap();
        assert!(curve.is_nonincreasing());
        for (k, v) in curve.k_values.iter().zip(&curve.tail_values) {
            if *k > 3.0 {
                assert_eq!(*v, 0.0);
            }
        }
        assert!(curve.passes(0.0));
    }

    #[test]
    fn one_bad_early_term_separates_ui_from_aui() {
        let s = line(4);
        let seq = constant_seq(s.clone(), 16);
        let fam = FunctionFamily::new(s, 16, |n, _| {
            ExtReal::new(if n == 1 { 1e7 } else { 0.5 })
        });
        let ks = default_k_schedule();
        let ui = ui_estimate(&fam, &seq, &ks).unwrap();
        let aui = aui_estimate(&fam, &seq, &ks).unwrap();
        assert!(!ui.passes(1e-9));
        assert!(aui.passes(1e-9));

        let probe = ui_aui_equivalence_probe(&fam, &seq, &ks, 1e-9).unwrap();
        assert_eq!(probe.status, crate::verdict::Status::Pass);
        assert_eq!(
            probe.get("smallest_ui_tail_index").unwrap(),
            ExtReal::new(2.0)
        );
    }

    #[test]
    fn bounded_family_has_trivial_ui_tail_index() {
        let s = line(4);
        let seq = constant_seq(s.clone(), 16);
        let fam = FunctionFamily::new(s, 16, |_, _| ExtReal::new(0.25));
        let probe = ui_aui_equivalence_probe(&fam, &seq, &default_k_schedule(), 1e-9).unwrap();
        assert_eq!(
            probe.get("smallest_ui_tail_index").unwrap(),
            ExtReal::new(1.0)
        );
    }

    #[test]
    fn escaping_spike_fails_both_ui_and_aui() {
        // f_n = n on the first ~1/n of a Lebesgue grid: tail integral stays 1.
        let r = 64usize;
        let s = line(r);
        let w = vec![1.0 / r as f64; r];
        let mu = AtomicMeasure::new(s.clone(), w).unwrap();
        let seq =
            MeasureSequence::from_generator(s.clone(), 16, |_| mu.clone(), mu.clone()).unwrap();
        let fam = FunctionFamily::new(s.clone(), 16, move |n, p| {
            let x = p as f64 / r as f64;
            ExtReal::new(if x < 1.0 / n as f64 { n as f64 } else { 0.0 })
        });
        let ks: Vec<f64> = (0..=3).map(|k| (2.0f64).powi(k)).collect();
        let aui = aui_estimate(&fam, &seq, &ks).unwrap();
        // For K <= n the spike contributes n * (#atoms under 1/n) / r ~ 1.
        assert!(aui.final_value() > 0.9);
        let probe = ui_aui_equivalence_probe(&fam, &seq, &ks, 1e-9).unwrap();
        assert_eq!(probe.status, crate::verdict::Status::Pass);
        assert!(probe.get("smallest_ui_tail_index").is_none());
    }
}
