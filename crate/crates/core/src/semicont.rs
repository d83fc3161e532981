//! Double lower limits, lower/upper semi-equicontinuity, uniform
//! semi-convergence from below, and semi-convergence in measure.
//!
//! `delta -> 0` is rendered by a finite [`RadiusSchedule`]; `n -> infinity` by
//! tail windows of the truncated horizon. The tail cap for starting indices is
//! `n_max/2`: letting a "for large n" quantifier start past the midpoint of a
//! truncated sequence degenerates into statements about single terms.

use crate::extreal::ExtReal;
use crate::family::FunctionFamily;
use crate::measure::AtomicMeasure;
use crate::space::{default_eps_schedule, RadiusSchedule};
use crate::verdict::Verdict;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SemicontError {
    #[error("check requires a limit candidate on the family")]
    MissingLimit,
    #[error("family and measure live on different spaces")]
    SpaceMismatch,
}

/// Approximate equality on extended reals: infinities must match exactly,
/// finite values within `tol`.
pub fn ext_approx_eq(a: ExtReal, b: ExtReal, tol: f64) -> bool {
    match (a, b) {
        (ExtReal::Finite(x), ExtReal::Finite(y)) => (x - y).abs() <= tol,
        _ => a == b,
    }
}

/// True when `hi - lo >= eps` in extended arithmetic (equal infinities never
/// exceed each other).
fn exceeds_by(hi: ExtReal, lo: ExtReal, eps: f64) -> bool {
    match (hi, lo) {
        (ExtReal::PosInf, ExtReal::PosInf) | (ExtReal::NegInf, ExtReal::NegInf) => false,
        (ExtReal::PosInf, _) => true,
        (ExtReal::NegInf, _) => false,
        (_, ExtReal::PosInf) => false,
        (_, ExtReal::NegInf) => true,
        (ExtReal::Finite(h), ExtReal::Finite(l)) => h - l >= eps,
    }
}

/// Finite rendering of `liminf_{n -> inf, s' -> s} f_n(s')`:
/// the sup-inf over starting index and radius.
///
/// Both the inner infima are monotone — shrinking the ball and advancing the
/// start can only raise the min — so the sup is attained at the finest radius
/// and the largest admissible start. The start is capped at `n_max/2` so the
/// inner min always ranges over a genuine tail rather than a single term.
pub fn double_lower_limit(fam: &FunctionFamily, s: usize, radii: &RadiusSchedule) -> ExtReal {
    let start = (fam.n_max() / 2).max(1);
    let delta = radii.finest();
    let mut m = ExtReal::PosInf;
    for sp in fam.space().ball(s, delta) {
        for k in start..=fam.n_max() {
            let v = fam.eval(k, sp);
            if v < m {
                m = v;
            }
        }
    }
    m
}

/// Finite rendering of `liminf_n f_n(s)`: min over the tail `k >= n_max/2`.
pub fn pointwise_lower_limit(fam: &FunctionFamily, s: usize) -> ExtReal {
    let start = (fam.n_max() / 2).max(1);
    (start..=fam.n_max())
        .map(|k| fam.eval(k, s))
        .min()
        .unwrap()
}

/// Whether a single term `f_n` is lower semicontinuous at `s` under the finite
/// rendering: for every eps some ball keeps `f_n` above `f_n(s) - eps`.
pub fn lsc_at_point(
    fam: &FunctionFamily,
    n: usize,
    s: usize,
    eps_schedule: &[f64],
    radii: &RadiusSchedule,
) -> bool {
    let base = fam.eval(n, s);
    eps_schedule.iter().all(|&eps| {
        // Finer balls can only help; try them first.
        radii.radii().iter().rev().any(|&delta| {
            fam.space()
                .ball(s, delta)
                .all(|sp| !exceeds_by(base, fam.eval(n, sp), eps))
        })
    })
}

/// Lower semi-equicontinuity at one point: a single ball must work for every
/// index of the family simultaneously.
pub fn lsec_at_point(
    fam: &FunctionFamily,
    s: usize,
    eps_schedule: &[f64],
    radii: &RadiusSchedule,
) -> bool {
    eps_schedule.iter().all(|&eps| {
        radii.radii().iter().rev().any(|&delta| {
            fam.space().ball(s, delta).all(|sp| {
                (1..=fam.n_max()).all(|n| !exceeds_by(fam.eval(n, s), fam.eval(n, sp), eps))
            })
        })
    })
}

fn equicontinuity_check(
    fam: &FunctionFamily,
    eps_schedule: &[f64],
    radii: &RadiusSchedule,
    check_id: &str,
) -> Verdict {
    let mut v = Verdict::new(check_id, fam.n_max(), 0.0);
    let mut violations = 0usize;
    for s in 0..fam.space().len() {
        if !lsec_at_point(fam, s, eps_schedule, radii) {
            violations += 1;
            if violations <= 8 {
                if let Some((eps, n, sp)) = first_lsec_witness(fam, s, eps_schedule, radii) {
                    v.note(format!(
                        "violation at point {s} (coord {:?}): f_{n}({sp}) <= f_{n}({s}) - {eps}",
                        fam.space().coord(s)
                    ));
                }
            }
        }
    }
    v.quantity_f("violating_points", violations as f64);
    v.note(format!("finest radius {:?}", radii.finest()));
    v.settle_diagnostic(violations == 0);
    v
}

/// A triple (eps, n, s') witnessing the lsec failure at `s`, if any.
fn first_lsec_witness(
    fam: &FunctionFamily,
    s: usize,
    eps_schedule: &[f64],
    radii: &RadiusSchedule,
) -> Option<(f64, usize, usize)> {
    for &eps in eps_schedule {
        let every_ball_fails = radii.radii().iter().all(|&delta| {
            fam.space().ball(s, delta).any(|sp| {
                (1..=fam.n_max()).any(|n| exceeds_by(fam.eval(n, s), fam.eval(n, sp), eps))
            })
        });
        if every_ball_fails {
            // Witness from the finest ball, where failure is sharpest.
            let delta = radii.finest();
            for sp in fam.space().ball(s, delta) {
                for n in 1..=fam.n_max() {
                    if exceeds_by(fam.eval(n, s), fam.eval(n, sp), eps) {
                        return Some((eps, n, sp));
                    }
                }
            }
        }
    }
    None
}

/// Lower semi-equicontinuity over the whole space.
pub fn lsec_check(fam: &FunctionFamily, eps_schedule: &[f64], radii: &RadiusSchedule) -> Verdict {
    equicontinuity_check(fam, eps_schedule, radii, "lsec")
}

/// Upper semi-equicontinuity: lsec of the negated family.
pub fn usec_check(fam: &FunctionFamily, eps_schedule: &[f64], radii: &RadiusSchedule) -> Verdict {
    equicontinuity_check(&fam.negated(), eps_schedule, radii, "usec")
}

/// Uniform semi-convergence from below to the limit candidate: for each eps
/// there must be a start index `N` past which every term dominates
/// `limit - eps` everywhere. The search is capped at `n_max/2`; an uncapped
/// search trivially succeeds at `N = n_max` on any truncation.
pub fn uniform_semi_convergence_below_check(
    fam: &FunctionFamily,
    eps_schedule: &[f64],
) -> Result<Verdict, SemicontError> {
    let limit = fam.limit_candidate().ok_or(SemicontError::MissingLimit)?.clone();
    let mut v = Verdict::new("uniform_semi_convergence_below", fam.n_max(), 0.0);
    v.note(format!("start index search capped at {}", fam.n_max() / 2));
    let mut all_ok = true;
    for (i, &eps) in eps_schedule.iter().enumerate() {
        let good_from = |start: usize| {
            (start..=fam.n_max()).all(|n| {
                (0..fam.space().len()).all(|s| !exceeds_by(limit(s), fam.eval(n, s), eps))
            })
        };
        match (1..=fam.n_max() / 2).find(|&n| good_from(n)) {
            Some(n) => {
                v.quantity_f(format!("min_start_eps{i}"), n as f64);
            }
            None => {
                all_ok = false;
                v.note(format!("no admissible start index for eps = {eps:?}"));
            }
        }
    }
    v.settle_diagnostic(all_ok);
    Ok(v)
}

/// Which one-sided deviation the in-measure check penalizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `mu{f_n <= f - eps} -> 0`.
    Lower,
    /// `mu{f_n >= f + eps} -> 0`.
    Upper,
    /// Both directions: convergence in measure.
    Both,
}

/// Semi-convergence in measure of the family to its limit candidate under
/// `mu`: for each eps the deviant-set mass must be below `tol` over the last
/// quarter of the horizon.
pub fn semi_convergence_in_measure_check(
    fam: &FunctionFamily,
    mu: &AtomicMeasure,
    eps_schedule: &[f64],
    direction: Direction,
    tol: f64,
) -> Result<Verdict, SemicontError> {
    let limit = fam.limit_candidate().ok_or(SemicontError::MissingLimit)?.clone();
    if mu.space().id() != fam.space().id() {
        return Err(SemicontError::SpaceMismatch);
    }
    let check_id = match direction {
        Direction::Lower => "lower_semi_convergence_in_measure",
        Direction::Upper => "upper_semi_convergence_in_measure",
        Direction::Both => "convergence_in_measure",
    };
    let mut v = Verdict::new(check_id, fam.n_max(), tol);
    let from = fam.n_max() - fam.n_max() / 4 + 1;
    let deviates = |n: usize, s: usize, eps: f64| match direction {
        Direction::Lower => exceeds_by(limit(s), fam.eval(n, s), eps),
        Direction::Upper => exceeds_by(fam.eval(n, s), limit(s), eps),
        Direction::Both => {
            exceeds_by(limit(s), fam.eval(n, s), eps) || exceeds_by(fam.eval(n, s), limit(s), eps)
        }
    };
    let mut worst: f64 = 0.0;
    for &eps in eps_schedule {
        for n in from..=fam.n_max() {
            let mass: f64 = (0..fam.space().len())
                .filter(|&s| deviates(n, s, eps))
                .map(|s| mu.weight(s))
                .sum();
            worst = worst.max(mass);
        }
    }
    v.quantity_f("max_tail_deviant_mass", worst);
    v.settle_diagnostic(worst <= tol);
    Ok(v)
}

/// Whether the value sequence `{f_n(s)}` settles: all tail values agree (for
/// infinities, exactly; for finite values, within `tol` of oscillation).
pub fn values_converge_at(fam: &FunctionFamily, s: usize, tol: f64) -> bool {
    let start = (fam.n_max() / 2).max(1);
    let tail: Vec<ExtReal> = (start..=fam.n_max()).map(|k| fam.eval(k, s)).collect();
    if tail.iter().any(|v| !matches!(v, ExtReal::Finite(_))) {
        return tail.windows(2).all(|w| w[0] == w[1]);
    }
    let lo = tail.iter().copied().min().unwrap().to_f64();
    let hi = tail.iter().copied().max().unwrap().to_f64();
    hi - lo <= tol
}

/// Cross-check of the characterization tying lower semi-equicontinuity to the
/// equality of the double and pointwise lower limits. At every point:
/// lsec implies equality; and equality plus value convergence plus per-term
/// lower semicontinuity implies lsec. Any broken implication is a bug.
pub fn llim_equality_check(fam: &FunctionFamily, radii: &RadiusSchedule, tol: f64) -> Verdict {
    let eps = default_eps_schedule();
    let mut v = Verdict::new("llim_equality", fam.n_max(), tol);
    let mut forward_violations = 0usize;
    let mut backward_violations = 0usize;
    for s in 0..fam.space().len() {
        let a = lsec_at_point(fam, s, &eps, radii);
        let b = ext_approx_eq(
            double_lower_limit(fam, s, radii),
            pointwise_lower_limit(fam, s),
            tol,
        );
        let c = values_converge_at(fam, s, tol);
        let lsc = (1..=fam.n_max()).all(|n| lsc_at_point(fam, n, s, &eps, radii));
        if a && !b {
            forward_violations += 1;
            if forward_violations <= 4 {
                v.note(format!("point {s}: lsec holds but the limits differ"));
            }
        }
        if b && c && lsc && !a {
            backward_violations += 1;
            if backward_violations <= 4 {
                v.note(format!("point {s}: limits agree and values converge but lsec fails"));
            }
        }
    }
    v.quantity_f("forward_violations", forward_violations as f64);
    v.quantity_f("backward_violations", backward_violations as f64);
    v.settle_theorem(forward_violations == 0 && backward_violations == 0);
    v
}

/// For a pointwise nondecreasing family, the double lower limit must equal
/// the plain limit (the final term of the truncation) at every point.
pub fn monotone_double_limit_check(
    fam: &FunctionFamily,
    radii: &RadiusSchedule,
    tol: f64,
) -> Verdict {
    let mut v = Verdict::new("monotone_double_limit", fam.n_max(), tol);
    let eps = default_eps_schedule();
    v.hypothesis("pointwise_nondecreasing", fam.is_pointwise_nondecreasing(tol));
    let lsc_all = (0..fam.space().len())
        .all(|s| (1..=fam.n_max()).all(|n| lsc_at_point(fam, n, s, &eps, radii)));
    v.hypothesis("terms_lower_semicontinuous", lsc_all);
    let mut mismatches = 0usize;
    let mut worst_gap: f64 = 0.0;
    for s in 0..fam.space().len() {
        let dll = double_lower_limit(fam, s, radii);
        let lim = fam.eval(fam.n_max(), s);
        if !ext_approx_eq(dll, lim, tol) {
            mismatches += 1;
            if mismatches <= 4 {
                v.note(format!("point {s}: double limit {dll} vs plain limit {lim}"));
            }
        }
        if let (ExtReal::Finite(a), ExtReal::Finite(b)) = (dll, lim) {
            worst_gap = worst_gap.max((a - b).abs());
        }
    }
    v.quantity_f("mismatched_points", mismatches as f64);
    v.quantity_f("worst_finite_gap", worst_gap);
    v.settle_theorem(mismatches == 0);
    v
}
