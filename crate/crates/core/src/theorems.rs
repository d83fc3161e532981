//! Verdict engines for the Fatou, Lebesgue, and monotone convergence
//! statements under varying measures, plus the uniform Fatou gap criterion
//! for total-variation convergence.
//!
//! Every engine tests an implication, not an instance: hypothesis failures
//! settle as `Inapplicable`, and `Bug` can only arise from a conclusion that
//! fails numerically while every hypothesis passed.

use crate::convergence::{
    aui_estimate, default_k_schedule, default_test_functions, setwise_convergence_check,
    tv_convergence_check, weak_convergence_check, ConvergenceError, MeasureSequence,
};
use crate::extreal::ExtReal;
use crate::family::{FunctionFamily, PointFn};
use crate::measure::{integrate, AtomicMeasure, IntegralValue, MeasureError};
use crate::semicont::{
    double_lower_limit, ext_approx_eq, lsc_at_point, lsec_at_point, pointwise_lower_limit,
    semi_convergence_in_measure_check, Direction, SemicontError,
};
use crate::space::{default_eps_schedule, RadiusSchedule};
use crate::verdict::Verdict;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TheoremError {
    #[error("engine requires a limit candidate on the family")]
    MissingLimit,
    #[error("instance parts disagree on space or horizon: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Convergence(#[from] ConvergenceError),
    #[error(transparent)]
    Semicont(#[from] SemicontError),
}

/// One theorem-check input: the function family, the measure sequence, an
/// optional minorant family, the radius schedule rendering `delta -> 0`, and
/// the tolerance all numeric comparisons use.
#[derive(Debug, Clone)]
pub struct TheoremInstance {
    pub fam: FunctionFamily,
    pub seq: MeasureSequence,
    pub minorant: Option<FunctionFamily>,
    pub radii: RadiusSchedule,
    pub tol: f64,
}

impl TheoremInstance {
    pub fn new(
        fam: FunctionFamily,
        seq: MeasureSequence,
        minorant: Option<FunctionFamily>,
        radii: RadiusSchedule,
        tol: f64,
    ) -> Result<TheoremInstance, TheoremError> {
        if fam.space().id() != seq.space().id() {
            return Err(TheoremError::Mismatch("family vs sequence space".into()));
        }
        if fam.n_max() != seq.n_max() {
            return Err(TheoremError::Mismatch("family vs sequence horizon".into()));
        }
        if let Some(g) = &minorant {
            if g.space().id() != fam.space().id() || g.n_max() != fam.n_max() {
                return Err(TheoremError::Mismatch("minorant space or horizon".into()));
            }
        }
        Ok(TheoremInstance { fam, seq, minorant, radii, tol })
    }
}

/// Dyadic eps sweep floored at the instance tolerance: deviations smaller
/// than the tolerance are not observable, so testing them over-constrains
/// the in-measure hypotheses.
fn eps_for_tol(tol: f64) -> Vec<f64> {
    let eps: Vec<f64> = default_eps_schedule().into_iter().filter(|&e| e >= tol).collect();
    if eps.is_empty() {
        vec![tol.max(1.0)]
    } else {
        eps
    }
}

/// `a <= b + tol` in extended arithmetic.
pub fn le_with_tol(a: ExtReal, b: ExtReal, tol: f64) -> bool {
    match (a, b) {
        (ExtReal::NegInf, _) | (_, ExtReal::PosInf) => true,
        (ExtReal::PosInf, _) | (_, ExtReal::NegInf) => false,
        (ExtReal::Finite(x), ExtReal::Finite(y)) => x <= y + tol,
    }
}

fn integral_of_term(fam: &FunctionFamily, n: usize, mu: &AtomicMeasure) -> Result<IntegralValue, MeasureError> {
    integrate(&|p| fam.eval(n, p), mu)
}

/// Integrals over the sequence; `None` marks an undefined integral.
fn integral_sequence(
    fam: &FunctionFamily,
    seq: &MeasureSequence,
) -> Result<Vec<Option<ExtReal>>, MeasureError> {
    (1..=fam.n_max().min(seq.n_max()))
        .map(|n| Ok(integral_of_term(fam, n, seq.term(n))?.defined()))
        .collect()
}

/// Tail min of the integral sequence (indices `>= n_max/2`), if all defined.
fn tail_liminf(values: &[Option<ExtReal>]) -> Option<ExtReal> {
    let from = (values.len() / 2).max(1);
    values[from - 1..].iter().copied().collect::<Option<Vec<_>>>()?.into_iter().min()
}

/// Last-quarter min and max: the "converges to" rendering needs both.
fn last_quarter_range(values: &[Option<ExtReal>]) -> Option<(ExtReal, ExtReal)> {
    let from = values.len() - values.len() / 4 + 1;
    let tail: Vec<ExtReal> =
        values[from - 1..].iter().copied().collect::<Option<Vec<_>>>()?;
    Some((tail.iter().copied().min()?, tail.iter().copied().max()?))
}

/// `int (double lower limit) dmu`.
fn dll_integral(
    fam: &FunctionFamily,
    radii: &RadiusSchedule,
    mu: &AtomicMeasure,
) -> Result<IntegralValue, MeasureError> {
    let vals: Vec<ExtReal> =
        (0..fam.space().len()).map(|s| double_lower_limit(fam, s, radii)).collect();
    integrate(&|p| vals[p], mu)
}

fn weak_hypothesis(inst: &TheoremInstance, v: &mut Verdict) -> Result<(), TheoremError> {
    let tests = default_test_functions(inst.seq.space(), 0);
    let w = weak_convergence_check(&inst.seq, &tests, inst.tol)?;
    v.hypothesis("measures_converge_weakly", w.status == crate::verdict::Status::Pass);
    Ok(())
}

fn setwise_hypothesis(inst: &TheoremInstance, v: &mut Verdict) -> Result<(), TheoremError> {
    let s = setwise_convergence_check(&inst.seq, None, inst.tol)?;
    v.hypothesis("measures_converge_setwise", s.status == crate::verdict::Status::Pass);
    Ok(())
}

fn aui_passes(
    fam: &FunctionFamily,
    seq: &MeasureSequence,
    tol: f64,
) -> Result<(bool, f64), TheoremError> {
    let curve = aui_estimate(fam, seq, &default_k_schedule())?;
    Ok((curve.passes(tol), curve.final_value()))
}

/// The minorant condition: a family `g_n <= f_n` whose double upper limit has
/// a defined integral above `-inf` that the tail of `int g_n dmu_n` dominates.
fn minorant_condition(inst: &TheoremInstance) -> Result<Option<bool>, TheoremError> {
    let Some(g) = &inst.minorant else { return Ok(None) };
    // Double upper limit of g = -(double lower limit of -g).
    let neg = g.negated();
    let upper: Vec<ExtReal> = (0..g.space().len())
        .map(|s| double_lower_limit(&neg, s, &inst.radii).neg())
        .collect();
    let lhs = integrate(&|p| upper[p], inst.seq.limit())?;
    let Some(lhs) = lhs.defined() else { return Ok(Some(false)) };
    if lhs == ExtReal::NegInf {
        return Ok(Some(false));
    }
    let g_ints = integral_sequence(g, &inst.seq)?;
    let Some(rhs) = tail_liminf(&g_ints) else { return Ok(Some(false)) };
    Ok(Some(le_with_tol(lhs, rhs, inst.tol)))
}

/// Integrand-side hypothesis shared by the Fatou engines: asymptotic uniform
/// integrability of the negative parts, or a valid minorant.
fn negative_part_hypothesis(inst: &TheoremInstance, v: &mut Verdict) -> Result<(), TheoremError> {
    let (aui_ok, aui_val) = aui_passes(&inst.fam.negative_part(), &inst.seq, inst.tol)?;
    v.quantity_f("negative_part_aui_value", aui_val);
    let minorant_ok = match minorant_condition(inst)? {
        Some(ok) => {
            v.note("minorant condition evaluated");
            ok
        }
        None => false,
    };
    v.hypothesis("negative_parts_aui_or_minorant", aui_ok || minorant_ok);
    Ok(())
}

/// Fatou's lemma with the double lower limit as integrand:
/// `int (liminf over n and s' -> s of f_n) dmu <= liminf int f_n dmu_n`.
pub fn fatou_weak_double(inst: &TheoremInstance) -> Result<Verdict, TheoremError> {
    let mut v = Verdict::new("fatou_weak_double", inst.fam.n_max(), inst.tol);
    weak_hypothesis(inst, &mut v)?;
    negative_part_hypothesis(inst, &mut v)?;
    let lhs = dll_integral(&inst.fam, &inst.radii, inst.seq.limit())?.defined();
    let rhs = tail_liminf(&integral_sequence(&inst.fam, &inst.seq)?);
    v.hypothesis("integrals_defined", lhs.is_some() && rhs.is_some());
    match (lhs, rhs) {
        (Some(l), Some(r)) => {
            v.quantity("integral_of_double_lower_limit", l);
            v.quantity("tail_liminf_of_integrals", r);
            v.settle_theorem(le_with_tol(l, r, inst.tol));
        }
        _ => {
            v.note("an integral was undefined");
            v.settle_theorem(true);
        }
    }
    Ok(v)
}

/// Classic-form Fatou under weak convergence: with lower semi-equicontinuity
/// and lower semi-convergence in measure, the limit function itself satisfies
/// `int f dmu <= liminf int f_n dmu_n`.
pub fn fatou_classic_weak(inst: &TheoremInstance) -> Result<Verdict, TheoremError> {
    let limit = inst.fam.limit_candidate().ok_or(TheoremError::MissingLimit)?.clone();
    let mut v = Verdict::new("fatou_classic_weak", inst.fam.n_max(), inst.tol);
    let eps = eps_for_tol(inst.tol);
    weak_hypothesis(inst, &mut v)?;
    let lsec_ok =
        (0..inst.fam.space().len()).all(|s| lsec_at_point(&inst.fam, s, &eps, &inst.radii));
    v.hypothesis("family_lower_semi_equicontinuous", lsec_ok);
    let scm = semi_convergence_in_measure_check(
        &inst.fam,
        inst.seq.limit(),
        &eps,
        Direction::Lower,
        inst.tol,
    )?;
    v.hypothesis(
        "lower_semi_convergence_in_measure",
        scm.status == crate::verdict::Status::Pass,
    );
    negative_part_hypothesis(inst, &mut v)?;
    let lhs = integrate(&|p| limit(p), inst.seq.limit())?.defined();
    let rhs = tail_liminf(&integral_sequence(&inst.fam, &inst.seq)?);
    v.hypothesis("integrals_defined", lhs.is_some() && rhs.is_some());
    match (lhs, rhs) {
        (Some(l), Some(r)) => {
            v.quantity("integral_of_limit", l);
            v.quantity("tail_liminf_of_integrals", r);
            v.settle_theorem(le_with_tol(l, r, inst.tol));
        }
        _ => {
            v.note("an integral was undefined");
            v.settle_theorem(true);
        }
    }
    Ok(v)
}

/// Fatou under setwise convergence: the main statement with the limit
/// function, the minorant variant, and the baseline with the pointwise lower
/// limit as integrand. Three sub-verdicts.
pub fn fatou_setwise(inst: &TheoremInstance) -> Result<Vec<Verdict>, TheoremError> {
    let eps = eps_for_tol(inst.tol);
    let rhs = tail_liminf(&integral_sequence(&inst.fam, &inst.seq)?);
    let mut out = Vec::new();

    // (i) limit function under lower semi-convergence in measure + a.u.i.
    {
        let mut v = Verdict::new("fatou_setwise_main", inst.fam.n_max(), inst.tol);
        setwise_hypothesis(inst, &mut v)?;
        match inst.fam.limit_candidate() {
            Some(limit) => {
                let scm = semi_convergence_in_measure_check(
                    &inst.fam,
                    inst.seq.limit(),
                    &eps,
                    Direction::Lower,
                    inst.tol,
                )?;
                v.hypothesis(
                    "lower_semi_convergence_in_measure",
                    scm.status == crate::verdict::Status::Pass,
                );
                let (aui_ok, aui_val) =
                    aui_passes(&inst.fam.negative_part(), &inst.seq, inst.tol)?;
                v.quantity_f("negative_part_aui_value", aui_val);
                v.hypothesis("negative_parts_aui", aui_ok);
                let lhs = integrate(&|p| limit(p), inst.seq.limit())?.defined();
                v.hypothesis("integrals_defined", lhs.is_some() && rhs.is_some());
                match (lhs, rhs) {
                    (Some(l), Some(r)) => {
                        v.quantity("integral_of_limit", l);
                        v.quantity("tail_liminf_of_integrals", r);
                        v.settle_theorem(le_with_tol(l, r, inst.tol));
                    }
                    _ => {
                        v.settle_theorem(true);
                    }
                }
            }
            None => {
                v.hypothesis("limit_candidate_present", false);
                v.settle_theorem(true);
            }
        }
        out.push(v);
    }

    // (ii) minorant variant: same conclusion, integrand condition via g_n.
    {
        let mut v = Verdict::new("fatou_setwise_minorant", inst.fam.n_max(), inst.tol);
        setwise_hypothesis(inst, &mut v)?;
        let minorant_ok = minorant_condition(inst)?;
        v.hypothesis("minorant_condition", minorant_ok == Some(true));
        match inst.fam.limit_candidate() {
            Some(limit) => {
                let scm = semi_convergence_in_measure_check(
                    &inst.fam,
                    inst.seq.limit(),
                    &eps,
                    Direction::Lower,
                    inst.tol,
                )?;
                v.hypothesis(
                    "lower_semi_convergence_in_measure",
                    scm.status == crate::verdict::Status::Pass,
                );
                let lhs = integrate(&|p| limit(p), inst.seq.limit())?.defined();
                v.hypothesis("integrals_defined", lhs.is_some() && rhs.is_some());
                match (lhs, rhs) {
                    (Some(l), Some(r)) => {
                        v.quantity("integral_of_limit", l);
                        v.quantity("tail_liminf_of_integrals", r);
                        v.settle_theorem(le_with_tol(l, r, inst.tol));
                    }
                    _ => {
                        v.settle_theorem(true);
                    }
                }
            }
            None => {
                v.hypothesis("limit_candidate_present", false);
                v.settle_theorem(true);
            }
        }
        out.push(v);
    }

    // (iii) baseline: pointwise lower limit as integrand.
    {
        let mut v = Verdict::new("fatou_setwise_baseline", inst.fam.n_max(), inst.tol);
        setwise_hypothesis(inst, &mut v)?;
        let (aui_ok, aui_val) = aui_passes(&inst.fam.negative_part(), &inst.seq, inst.tol)?;
        v.quantity_f("negative_part_aui_value", aui_val);
        v.hypothesis("negative_parts_aui", aui_ok);
        let pll: Vec<ExtReal> = (0..inst.fam.space().len())
            .map(|s| pointwise_lower_limit(&inst.fam, s))
            .collect();
        let lhs = integrate(&|p| pll[p], inst.seq.limit())?.defined();
        v.hypothesis("integrals_defined", lhs.is_some() && rhs.is_some());
        match (lhs, rhs) {
            (Some(l), Some(r)) => {
                v.quantity("integral_of_pointwise_lower_limit", l);
                v.quantity("tail_liminf_of_integrals", r);
                v.settle_theorem(le_with_tol(l, r, inst.tol));
            }
            _ => {
                v.settle_theorem(true);
            }
        }
        out.push(v);
    }
    Ok(out)
}

/// The infimum over sets of `int_C f_n dmu_n - int_C f dmu`, computed
/// atomwise: each atom contributes independently, so the minimizing set
/// collects exactly the atoms with negative contribution.
pub fn atomwise_gap(
    fam: &FunctionFamily,
    n: usize,
    f: &PointFn,
    mu_n: &AtomicMeasure,
    mu: &AtomicMeasure,
) -> ExtReal {
    let mut total = ExtReal::ZERO;
    for p in 0..mu.space().len() {
        let d = fam
            .eval(n, p)
            .scale_by_weight(mu_n.weight(p))
            .checked_sub(f(p).scale_by_weight(mu.weight(p)))
            .expect("integrable instances have finite atom contributions");
        if d < ExtReal::ZERO {
            total = total.checked_add(d).expect("no +inf terms below zero");
        }
    }
    total
}

/// Uniform Fatou criterion under total-variation convergence: the tail of the
/// set-uniform gap is nonnegative if and only if the family lower
/// semi-converges in measure to `f` under `mu` and the negative parts are
/// asymptotically uniformly integrable. The engine asserts the equivalence
/// itself; a one-sided mismatch is a bug.
pub fn uniform_fatou_gap(
    fam: &FunctionFamily,
    f: &PointFn,
    seq: &MeasureSequence,
    tol: f64,
) -> Result<Verdict, TheoremError> {
    let mut v = Verdict::new("uniform_fatou_gap", fam.n_max(), tol);
    let tv = tv_convergence_check(seq, tol)?;
    v.hypothesis("measures_converge_in_tv", tv.status == crate::verdict::Status::Pass);

    let f_integrable = integrate(&|p| f(p).abs(), seq.limit())?
        .defined()
        .map(|m| m.is_finite())
        .unwrap_or(false);
    let terms_integrable = (1..=fam.n_max()).all(|n| {
        integrate(&|p| fam.eval(n, p).abs(), seq.term(n))
            .ok()
            .and_then(IntegralValue::defined)
            .map(|m| m.is_finite())
            .unwrap_or(false)
    });
    v.hypothesis("integrands_integrable", f_integrable && terms_integrable);
    if !v.all_hypotheses_hold() {
        v.settle_theorem(true);
        return Ok(v);
    }

    let gaps: Vec<Option<ExtReal>> = (1..=fam.n_max())
        .map(|n| Some(atomwise_gap(fam, n, f, seq.term(n), seq.limit())))
        .collect();
    let tail_gap = tail_liminf(&gaps).expect("gaps of integrable instances are finite");
    v.quantity("tail_liminf_gap", tail_gap);
    let conclusion = le_with_tol(ExtReal::ZERO, tail_gap, tol);

    let fam_with_f = attach_limit(fam, f);
    let scm = semi_convergence_in_measure_check(
        &fam_with_f,
        seq.limit(),
        &default_eps_schedule(),
        Direction::Lower,
        tol,
    )?;
    let cond_lower = scm.status == crate::verdict::Status::Pass;
    let (cond_aui, aui_val) = aui_passes(&fam.negative_part(), seq, tol)?;
    v.quantity_f("negative_part_aui_value", aui_val);
    v.quantity_f("condition_lower_semiconv", cond_lower as u8 as f64);
    v.quantity_f("condition_negative_part_aui", cond_aui as u8 as f64);
    v.quantity_f("conclusion_gap_nonnegative", conclusion as u8 as f64);
    v.settle_theorem(conclusion == (cond_lower && cond_aui));
    Ok(v)
}

/// The same family with `f` installed as limit candidate.
fn attach_limit(fam: &FunctionFamily, f: &PointFn) -> FunctionFamily {
    let inner = fam.clone();
    let g = f.clone();
    FunctionFamily::new(fam.space().clone(), fam.n_max(), move |n, p| inner.eval(n, p))
        .with_limit(move |p| g(p))
}

/// Lebesgue convergence under weak convergence: the double-limit variant and
/// the equicontinuous variant, as two sub-verdicts.
pub fn lebesgue_weak(inst: &TheoremInstance) -> Result<Vec<Verdict>, TheoremError> {
    let eps = eps_for_tol(inst.tol);
    let ints = integral_sequence(&inst.fam, &inst.seq)?;
    let mut out = Vec::new();

    // Variant 1: a.u.i. |f_n| + existence of the double limit mu-a.e.;
    // the limit of the integrals is the integral of the double limit.
    {
        let mut v = Verdict::new("lebesgue_weak_double_limit", inst.fam.n_max(), inst.tol);
        weak_hypothesis(inst, &mut v)?;
        let (aui_ok, aui_val) = aui_passes(&inst.fam.abs_value(), &inst.seq, inst.tol)?;
        v.quantity_f("abs_aui_value", aui_val);
        v.hypothesis("abs_family_aui", aui_ok);
        let neg = inst.fam.negated();
        let mu = inst.seq.limit();
        let dll: Vec<ExtReal> = (0..inst.fam.space().len())
            .map(|s| double_lower_limit(&inst.fam, s, &inst.radii))
            .collect();
        let exists_ae = (0..inst.fam.space().len()).all(|s| {
            mu.weight(s) == 0.0
                || ext_approx_eq(
                    dll[s],
                    double_lower_limit(&neg, s, &inst.radii).neg(),
                    inst.tol,
                )
        });
        v.hypothesis("double_limit_exists_ae", exists_ae);
        let target = integrate(&|p| dll[p], mu)?.defined();
        let range = last_quarter_range(&ints);
        v.hypothesis("integrals_defined", target.is_some() && range.is_some());
        match (target, range) {
            (Some(t), Some((lo, hi))) => {
                v.quantity("limit_integral_target", t);
                v.quantity("tail_min_integral", lo);
                v.quantity("tail_max_integral", hi);
                let ok = ext_approx_eq(lo, t, inst.tol) && ext_approx_eq(hi, t, inst.tol);
                v.settle_theorem(ok);
            }
            _ => {
                v.settle_theorem(true);
            }
        }
        out.push(v);
    }

    // Variant 2: equicontinuity + convergence in measure + a.u.i.;
    // the limit of the integrals is the integral of the limit candidate.
    {
        let mut v = Verdict::new("lebesgue_weak_equicontinuous", inst.fam.n_max(), inst.tol);
        weak_hypothesis(inst, &mut v)?;
        match inst.fam.limit_candidate().cloned() {
            Some(limit) => {
                let space_len = inst.fam.space().len();
                let lsec_ok =
                    (0..space_len).all(|s| lsec_at_point(&inst.fam, s, &eps, &inst.radii));
                let neg = inst.fam.negated();
                let usec_ok = (0..space_len).all(|s| lsec_at_point(&neg, s, &eps, &inst.radii));
                v.hypothesis("family_equicontinuous", lsec_ok && usec_ok);
                let scm = semi_convergence_in_measure_check(
                    &inst.fam,
                    inst.seq.limit(),
                    &eps,
                    Direction::Both,
                    inst.tol,
                )?;
                v.hypothesis(
                    "convergence_in_measure",
                    scm.status == crate::verdict::Status::Pass,
                );
                let (aui_ok, aui_val) = aui_passes(&inst.fam.abs_value(), &inst.seq, inst.tol)?;
                v.quantity_f("abs_aui_value", aui_val);
                v.hypothesis("abs_family_aui", aui_ok);
                settle_integral_equality(&mut v, &limit, inst, &ints)?;
            }
            None => {
                v.hypothesis("limit_candidate_present", false);
                v.settle_theorem(true);
            }
        }
        out.push(v);
    }
    Ok(out)
}

/// Shared tail: conclusion `lim int f_n dmu_n = int limit dmu` within tol.
fn settle_integral_equality(
    v: &mut Verdict,
    limit: &PointFn,
    inst: &TheoremInstance,
    ints: &[Option<ExtReal>],
) -> Result<(), TheoremError> {
    let target = integrate(&|p| limit(p), inst.seq.limit())?.defined();
    let range = last_quarter_range(ints);
    v.hypothesis("integrals_defined", target.is_some() && range.is_some());
    match (target, range) {
        (Some(t), Some((lo, hi))) => {
            v.quantity("limit_integral_target", t);
            v.quantity("tail_min_integral", lo);
            v.quantity("tail_max_integral", hi);
            v.settle_theorem(ext_approx_eq(lo, t, v.tolerance) && ext_approx_eq(hi, t, v.tolerance));
        }
        _ => {
            v.note("an integral was undefined");
            v.settle_theorem(true);
        }
    }
    Ok(())
}

/// Lebesgue convergence under setwise convergence.
pub fn lebesgue_setwise(inst: &TheoremInstance) -> Result<Verdict, TheoremError> {
    let eps = eps_for_tol(inst.tol);
    let mut v = Verdict::new("lebesgue_setwise", inst.fam.n_max(), inst.tol);
    setwise_hypothesis(inst, &mut v)?;
    match inst.fam.limit_candidate().cloned() {
        Some(limit) => {
            let scm = semi_convergence_in_measure_check(
                &inst.fam,
                inst.seq.limit(),
                &eps,
                Direction::Both,
                inst.tol,
            )?;
            v.hypothesis(
                "convergence_in_measure",
                scm.status == crate::verdict::Status::Pass,
            );
            let (aui_ok, aui_val) = aui_passes(&inst.fam.abs_value(), &inst.seq, inst.tol)?;
            v.quantity_f("abs_aui_value", aui_val);
            v.hypothesis("abs_family_aui", aui_ok);
            let ints = integral_sequence(&inst.fam, &inst.seq)?;
            settle_integral_equality(&mut v, &limit, inst, &ints)?;
        }
        None => {
            v.hypothesis("limit_candidate_present", false);
            v.settle_theorem(true);
        }
    }
    Ok(v)
}

/// Whether a single function is upper semicontinuous at every point under the
/// finite rendering (lower semicontinuity of its negation).
fn usc_everywhere(
    space: &crate::space::SpaceRef,
    f: &PointFn,
    eps: &[f64],
    radii: &RadiusSchedule,
) -> bool {
    let g = f.clone();
    let neg = FunctionFamily::new(space.clone(), crate::family::MIN_HORIZON, move |_, p| {
        g(p).neg()
    });
    (0..space.len()).all(|s| lsc_at_point(&neg, 1, s, eps, radii))
}

/// Constant-family a.u.i. of a single function against the sequence.
fn single_fn_aui(
    space: &crate::space::SpaceRef,
    f: &PointFn,
    seq: &MeasureSequence,
    tol: f64,
) -> Result<bool, TheoremError> {
    let fam = FunctionFamily::constant(space.clone(), seq.n_max(), f.clone());
    Ok(aui_passes(&fam, seq, tol)?.0)
}

/// Pointwise limit of a nondecreasing family: the final term of the
/// truncation.
fn monotone_limit(fam: &FunctionFamily) -> PointFn {
    if let Some(f) = fam.limit_candidate() {
        return f.clone();
    }
    let inner = fam.clone();
    let last = fam.n_max();
    std::sync::Arc::new(move |p| inner.eval(last, p))
}

/// The family of ball minima at a fixed radius:
/// `env_n(s) = min over s' in B_r(s) of f_n(s')`.
pub fn lower_envelope(fam: &FunctionFamily, radius: f64) -> FunctionFamily {
    let space = fam.space().clone();
    let balls: Vec<Vec<usize>> =
        (0..space.len()).map(|s| space.ball(s, radius).collect()).collect();
    let inner = fam.clone();
    FunctionFamily::new(space, fam.n_max(), move |n, s| {
        balls[s].iter().map(|&sp| inner.eval(n, sp)).min().unwrap()
    })
}

/// Monotone convergence under weak convergence: the semicontinuous-terms
/// variant and the lower-envelope variant, as two sub-verdicts.
pub fn monotone_weak(inst: &TheoremInstance) -> Result<Vec<Verdict>, TheoremError> {
    let eps = eps_for_tol(inst.tol);
    let ints = integral_sequence(&inst.fam, &inst.seq)?;
    let f = monotone_limit(&inst.fam);
    let space = inst.fam.space().clone();
    let mut out = Vec::new();

    // Variant 1: lsc terms, usc limit, a.u.i. of f_1^- and f^+.
    {
        let mut v = Verdict::new("monotone_weak_usc_limit", inst.fam.n_max(), inst.tol);
        weak_hypothesis(inst, &mut v)?;
        v.hypothesis(
            "pointwise_nondecreasing",
            inst.fam.is_pointwise_nondecreasing(inst.tol),
        );
        let lsc_ok = (0..space.len())
            .all(|s| (1..=inst.fam.n_max()).all(|n| lsc_at_point(&inst.fam, n, s, &eps, &inst.radii)));
        v.hypothesis("terms_lower_semicontinuous", lsc_ok);
        v.hypothesis(
            "limit_upper_semicontinuous",
            usc_everywhere(&space, &f, &eps, &inst.radii),
        );
        let first = {
            let inner = inst.fam.clone();
            let g: PointFn = std::sync::Arc::new(move |p| inner.eval(1, p).neg_part());
            g
        };
        let fplus = {
            let g = f.clone();
            let h: PointFn = std::sync::Arc::new(move |p| g(p).pos_part());
            h
        };
        v.hypothesis(
            "first_negative_and_limit_positive_parts_aui",
            single_fn_aui(&space, &first, &inst.seq, inst.tol)?
                && single_fn_aui(&space, &fplus, &inst.seq, inst.tol)?,
        );
        settle_integral_equality(&mut v, &f, inst, &ints)?;
        out.push(v);
    }

    // Variant 2: measurable terms, lower-envelope conditions.
    {
        let mut v = Verdict::new("monotone_weak_lower_envelope", inst.fam.n_max(), inst.tol);
        weak_hypothesis(inst, &mut v)?;
        v.hypothesis(
            "pointwise_nondecreasing",
            inst.fam.is_pointwise_nondecreasing(inst.tol),
        );
        let real_valued = (0..space.len()).all(|s| f(s).is_finite());
        v.hypothesis(
            "limit_real_valued_and_usc",
            real_valued && usc_everywhere(&space, &f, &eps, &inst.radii),
        );
        let env = {
            let g = f.clone();
            lower_envelope(&inst.fam, inst.radii.finest()).with_limit(move |p| g(p))
        };
        let scm = semi_convergence_in_measure_check(
            &env,
            inst.seq.limit(),
            &eps,
            Direction::Lower,
            inst.tol,
        )?;
        v.hypothesis(
            "envelope_lower_semi_converges_in_measure",
            scm.status == crate::verdict::Status::Pass,
        );
        let env1 = {
            let inner = env.clone();
            let g: PointFn = std::sync::Arc::new(move |p| inner.eval(1, p).neg_part());
            g
        };
        let fplus = {
            let g = f.clone();
            let h: PointFn = std::sync::Arc::new(move |p| g(p).pos_part());
            h
        };
        v.hypothesis(
            "envelope_negative_and_limit_positive_parts_aui",
            single_fn_aui(&space, &env1, &inst.seq, inst.tol)?
                && single_fn_aui(&space, &fplus, &inst.seq, inst.tol)?,
        );
        settle_integral_equality(&mut v, &f, inst, &ints)?;
        out.push(v);
    }
    Ok(out)
}

/// Monotone convergence under setwise convergence.
pub fn monotone_setwise(inst: &TheoremInstance) -> Result<Verdict, TheoremError> {
    let mut v = Verdict::new("monotone_setwise", inst.fam.n_max(), inst.tol);
    setwise_hypothesis(inst, &mut v)?;
    v.hypothesis(
        "pointwise_nondecreasing",
        inst.fam.is_pointwise_nondecreasing(inst.tol),
    );
    let f = monotone_limit(&inst.fam);
    let space = inst.fam.space().clone();
    let first = {
        let inner = inst.fam.clone();
        let g: PointFn = std::sync::Arc::new(move |p| inner.eval(1, p).neg_part());
        g
    };
    let fplus = {
        let g = f.clone();
        let h: PointFn = std::sync::Arc::new(move |p| g(p).pos_part());
        h
    };
    v.hypothesis(
        "first_negative_and_limit_positive_parts_aui",
        single_fn_aui(&space, &first, &inst.seq, inst.tol)?
            && single_fn_aui(&space, &fplus, &inst.seq, inst.tol)?,
    );
    let ints = integral_sequence(&inst.fam, &inst.seq)?;
    settle_integral_equality(&mut v, &f, inst, &ints)?;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{MetricPointSet, SpaceRef};
    use crate::verdict::Status;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn line(n: usize) -> SpaceRef {
        MetricPointSet::euclidean_line(
            "line",
            (0..n).map(|i| i as f64 / n as f64).collect(),
        )
        .unwrap()
    }

    fn constant_seq(space: &SpaceRef, n_max: usize) -> MeasureSequence {
        let w = vec![1.0 / space.len() as f64; space.len()];
        let mu = AtomicMeasure::new(space.clone(), w).unwrap();
        MeasureSequence::from_generator(space.clone(), n_max, |_| mu.clone(), mu.clone())
            .unwrap()
    }

    fn constant_instance(value: f64) -> TheoremInstance {
        let s = line(6);
        let seq = constant_seq(&s, 16);
        let fam = FunctionFamily::new(s.clone(), 16, move |_, _| ExtReal::new(value))
            .with_limit(move |_| ExtReal::new(value));
        let minorant = fam.clone();
        TheoremInstance::new(fam, seq, Some(minorant), RadiusSchedule::fine_for(&s), 1e-9)
            .unwrap()
    }

    #[test]
    fn constant_instance_passes_all_engines_with_equality() {
        let inst = constant_instance(0.75);
        let v = fatou_weak_double(&inst).unwrap();
        assert_eq!(v.status, Status::Pass);
        assert_eq!(
            v.get("integral_of_double_lower_limit"),
            v.get("tail_liminf_of_integrals")
        );
        assert_eq!(fatou_classic_weak(&inst).unwrap().status, Status::Pass);
        for sub in fatou_setwise(&inst).unwrap() {
            assert_eq!(sub.status, Status::Pass, "{}", sub.check_id);
        }
        for sub in lebesgue_weak(&inst).unwrap() {
            assert_eq!(sub.status, Status::Pass, "{}", sub.check_id);
        }
        assert_eq!(lebesgue_setwise(&inst).unwrap().status, Status::Pass);
        for sub in monotone_weak(&inst).unwrap() {
            assert_eq!(sub.status, Status::Pass, "{}", sub.check_id);
        }
        assert_eq!(monotone_setwise(&inst).unwrap().status, Status::Pass);
    }

    #[test]
    fn aui_violation_is_inapplicable_not_a_bug() {
        // A single atom whose weight halves while the value doubles far past
        // the top of the K schedule: the negative-part a.u.i. hypothesis
        // fails, so the (false) conclusion must settle as inapplicable.
        let s = line(1);
        let limit = AtomicMeasure::new(s.clone(), vec![0.0]).unwrap();
        let seq = MeasureSequence::from_generator(
            s.clone(),
            16,
            |n| AtomicMeasure::new(limit.space().clone(), vec![(0.5f64).powi(n as i32)]).unwrap(),
            limit.clone(),
        )
        .unwrap();
        let fam = FunctionFamily::new(s.clone(), 16, |n, _| {
            ExtReal::new(-(2.0f64).powi(n as i32 + 20))
        });
        let inst =
            TheoremInstance::new(fam, seq, None, RadiusSchedule::new(vec![0.5]), 1e-9).unwrap();
        let v = fatou_weak_double(&inst).unwrap();
        assert_eq!(v.status, Status::Inapplicable);
        assert_eq!(v.hypothesis_report["negative_parts_aui_or_minorant"], false);
        // The raw inequality indeed fails: 0 > -2^21.
        assert!(!le_with_tol(
            v.get("integral_of_double_lower_limit").unwrap(),
            v.get("tail_liminf_of_integrals").unwrap(),
            1e-9
        ));
    }

    #[test]
    fn ramp_family_passes_classic_fatou_at_coarse_tolerance() {
        let r = 16usize;
        let s = line(r);
        let seq = constant_seq(&s, r);
        let coords: Arc<Vec<f64>> = Arc::new(s.coords().unwrap().to_vec());
        let c2 = coords.clone();
        let fam = FunctionFamily::new(s.clone(), r, move |n, p| {
            ExtReal::new((n as f64 * coords[p]).min(1.0))
        })
        .with_limit(move |p| ExtReal::new(if c2[p] > 0.0 { 1.0 } else { 0.0 }));
        let inst =
            TheoremInstance::new(fam, seq, None, RadiusSchedule::fine_for(&s), 0.1).unwrap();
        let v = fatou_classic_weak(&inst).unwrap();
        assert_eq!(v.status, Status::Pass);
    }

    #[test]
    fn uniform_gap_vanishes_on_identical_data() {
        let s = line(4);
        let seq = constant_seq(&s, 16);
        let f: PointFn = Arc::new(|p| ExtReal::new(p as f64 - 1.5));
        let g = f.clone();
        let fam = FunctionFamily::new(s, 16, move |_, p| g(p));
        let v = uniform_fatou_gap(&fam, &f, &seq, 1e-9).unwrap();
        assert_eq!(v.status, Status::Pass);
        assert_eq!(v.get("tail_liminf_gap").unwrap(), ExtReal::ZERO);
        assert_eq!(v.get("conclusion_gap_nonnegative").unwrap(), ExtReal::new(1.0));
    }

    #[test]
    fn shifted_down_family_fails_condition_and_gap_consistently() {
        // f_n = f - 1 everywhere: the gap is -total_mass and lower
        // semi-convergence in measure fails; the equivalence must hold.
        let s = line(4);
        let seq = constant_seq(&s, 16);
        let f: PointFn = Arc::new(|_| ExtReal::new(2.0));
        let fam = FunctionFamily::new(s, 16, |_, _| ExtReal::new(1.0));
        let v = uniform_fatou_gap(&fam, &f, &seq, 1e-9).unwrap();
        assert_eq!(v.status, Status::Pass);
        assert_eq!(v.get("tail_liminf_gap").unwrap(), ExtReal::new(-1.0));
        assert_eq!(v.get("condition_lower_semiconv").unwrap(), ExtReal::ZERO);
        assert_eq!(v.get("conclusion_gap_nonnegative").unwrap(), ExtReal::ZERO);
    }

    #[test]
    fn atomwise_gap_matches_exhaustive_subset_minimum() {
        let s = line(5);
        let mu_n = AtomicMeasure::new(s.clone(), vec![0.1, 0.3, 0.05, 0.25, 0.3]).unwrap();
        let mu = AtomicMeasure::new(s.clone(), vec![0.2, 0.2, 0.2, 0.2, 0.2]).unwrap();
        let f: PointFn = Arc::new(|p| ExtReal::new([1.0, -2.0, 0.5, 3.0, -1.0][p]));
        let fam = FunctionFamily::new(s.clone(), 8, |n, p| {
            ExtReal::new([0.5, -1.0, 2.0, -0.5, 1.5][p] + n as f64 * 0.01)
        });
        let got = atomwise_gap(&fam, 3, &f, &mu_n, &mu).to_f64();
        // Exhaustive minimum over all 2^5 subsets.
        let mut best = f64::INFINITY;
        for mask in 0u32..32 {
            let mut total = 0.0;
            for p in 0..5 {
                if mask & (1 << p) != 0 {
                    total += fam.eval(3, p).to_f64() * mu_n.weight(p)
                        - f(p).to_f64() * mu.weight(p);
                }
            }
            best = best.min(total);
        }
        assert_eq!(got, best);
    }

    #[test]
    fn monotone_engines_reject_non_monotone_families() {
        let s = line(4);
        let seq = constant_seq(&s, 16);
        let fam = FunctionFamily::new(s.clone(), 16, |n, _| {
            ExtReal::new(if n % 2 == 0 { 1.0 } else { 0.0 })
        });
        let inst =
            TheoremInstance::new(fam, seq, None, RadiusSchedule::fine_for(&s), 1e-9).unwrap();
        for sub in monotone_weak(&inst).unwrap() {
            assert_eq!(sub.status, Status::Inapplicable, "{}", sub.check_id);
            assert_eq!(sub.hypothesis_report["pointwise_nondecreasing"], false);
        }
        assert_eq!(monotone_setwise(&inst).unwrap().status, Status::Inapplicable);
    }

    #[test]
    fn rising_family_passes_monotone_engines() {
        let s = line(6);
        let seq = constant_seq(&s, 16);
        let coords: Arc<Vec<f64>> = Arc::new(s.coords().unwrap().to_vec());
        let fam = FunctionFamily::new(s.clone(), 16, move |n, p| {
            ExtReal::new(coords[p] - 1.0 / n as f64)
        });
        let inst =
            TheoremInstance::new(fam, seq, None, RadiusSchedule::fine_for(&s), 0.2).unwrap();
        for sub in monotone_weak(&inst).unwrap() {
            assert_eq!(sub.status, Status::Pass, "{}", sub.check_id);
        }
        assert_eq!(monotone_setwise(&inst).unwrap().status, Status::Pass);
    }

    #[test]
    fn spike_family_is_inapplicable_for_lebesgue_via_double_limit() {
        // f_n = min(ns, 1) under the point mass at 0: the double limit at 0
        // does not exist at coarse radii (lower 0-ish vs upper 1), and the
        // point carries all the mass.
        let r = 64usize;
        let s = line(r);
        let coords: Arc<Vec<f64>> = Arc::new(s.coords().unwrap().to_vec());
        let dirac0 = AtomicMeasure::dirac(s.clone(), 0);
        let seq = MeasureSequence::from_generator(
            s.clone(),
            r,
            |_| dirac0.clone(),
            dirac0.clone(),
        )
        .unwrap();
        let fam = FunctionFamily::new(s.clone(), r, move |n, p| {
            ExtReal::new((n as f64 * coords[p]).min(1.0))
        });
        let inst =
            TheoremInstance::new(fam, seq, None, RadiusSchedule::coarse_for(&s), 1e-9).unwrap();
        let subs = lebesgue_weak(&inst).unwrap();
        let double = &subs[0];
        assert_eq!(double.status, Status::Inapplicable);
        assert_eq!(double.hypothesis_report["double_limit_exists_ae"], false);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn engines_never_report_bugs_on_random_bounded_instances(
            values in proptest::collection::vec(-5.0f64..5.0, 5 * 16),
            weights in proptest::collection::vec(0.0f64..1.0, 5),
        ) {
            let s = line(5);
            let mu = AtomicMeasure::new(s.clone(), weights).unwrap();
            let seq = MeasureSequence::from_generator(s.clone(), 16, |_| mu.clone(), mu.clone()).unwrap();
            let vals = Arc::new(values);
            let v2 = vals.clone();
            let fam = FunctionFamily::new(s.clone(), 16, move |n, p| {
                ExtReal::new(v2[(n - 1) * 5 + p])
            });
            let inst = TheoremInstance::new(fam, seq, None, RadiusSchedule::coarse_for(&s), 1e-6).unwrap();
            let mut all = vec![fatou_weak_double(&inst).unwrap()];
            all.extend(fatou_setwise(&inst).unwrap());
            all.extend(lebesgue_weak(&inst).unwrap());
            all.extend(monotone_weak(&inst).unwrap());
            all.push(monotone_setwise(&inst).unwrap());
            for v in all {
                prop_assert_ne!(v.status, Status::Bug, "{}", v.check_id);
            }
        }
    }
}
