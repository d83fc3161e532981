//! Batch runner: named fixtures, randomized suites, and model solving.
//!
//! Exit codes are a stable contract: 0 success, 1 a verdict mismatch or a
//! bug-status verdict, 2 usage or input error. All runs are deterministic in
//! the seed; `VM_LAB_THREADS` caps the worker count (the runner is currently
//! a single serial worker, which satisfies any positive cap).

use clap::{Parser, Subcommand, ValueEnum};
use fatou_lab::extreal::ExtReal;
use fatou_lab::fixtures::fixture_by_name;
use fatou_lab::gen::{implication_chain_suite, theorem_suite, uniform_fl_suite};
use fatou_lab::mdp::{
    acoe_residual, acoi_residual, assumption_b_check, assumption_lec_check, average_cost_oracle,
    default_alpha_schedule, eq_chain_check, limit_relative_value, vanishing_discount_sweep,
    LimitMode, MdpDocument,
};
use fatou_lab::report::{fmt_f64, Report, ReportFormat};
use fatou_lab::space::RadiusSchedule;
use std::path::PathBuf;
use std::process::ExitCode;

/// Settling tolerance for vanishing-discount limits: the finest discount in
/// the default schedule is 1 - 2^-12, so scaled values resolve no finer than
/// a few parts in a thousand.
const LIMIT_TOL: f64 = 2e-3;
/// Agreement required between the sweep window and the oracle gain.
const ORACLE_AGREEMENT: f64 = 1e-3;

#[derive(Parser)]
#[command(name = "fatou-lab", version, about = "Numerical verification runner for integral convergence theorems and average-cost MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> ReportFormat {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a named fixture and compare every computed quantity against its
    /// pinned expectation.
    Verify {
        /// Fixture name, e.g. example-4-1.
        fixture: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Seeded randomized suites: every theorem engine over random instances,
    /// the uniform-gap criterion with exhaustive cross-check, and the
    /// convergence-mode implication chain.
    RandomSuite {
        #[arg(long, default_value_t = 20240601)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0.5)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Solve a model file with the vanishing-discount sweep and emit the
    /// gain, relative values, policy, residuals, and assumption verdicts.
    SolveMdp {
        /// Path to a model document (JSON).
        model: PathBuf,
        /// Comma-separated ascending discount factors; defaults to 1 - 2^-n.
        #[arg(long)]
        alphas: Option<String>,
        /// Discounted-solver precision.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Cross-check against the policy-iteration oracle.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

fn emit(report: &Report, out: Option<&PathBuf>, format: Format) -> Result<(), String> {
    let body = report.render(format.into());
    match out {
        Some(path) => std::fs::write(path, body).map_err(|e| format!("writing {}: {e}", path.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn worker_cap() -> Result<usize, String> {
    match std::env::var("VM_LAB_THREADS") {
        Ok(raw) => raw
            .parse::<usize>()
            .map(|n| n.max(1))
            .map_err(|_| format!("VM_LAB_THREADS must be a positive integer, got {raw:?}")),
        Err(_) => Ok(1),
    }
}

fn cmd_verify(fixture: &str, out: Option<&PathBuf>, format: Format) -> Result<ExitCode, String> {
    let fx = match fixture_by_name(fixture) {
        Ok(fx) => fx,
        Err(e) => return Err(format!("unknown or invalid fixture {fixture:?}: {e}")),
    };
    let fr = fx.verify().map_err(|e| format!("running {fixture}: {e}"))?;
    let mut report = Report::new(format!("verify {fixture}"));
    report.extend(fr.verdicts.clone());
    for (key, value) in &fr.actual {
        report.summarize(format!("actual.{key}"), value.to_string());
    }
    for (key, entry) in &fr.expected {
        report.summarize(format!("expected.{key}"), entry.value.to_string());
    }
    for (i, m) in fr.mismatches.iter().enumerate() {
        report.summarize(format!("mismatch.{i}"), m.clone());
    }
    report.summarize("passed", fr.passed().to_string());
    emit(&report, out, format)?;
    Ok(if fr.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_random_suite(
    seed: u64,
    trials: usize,
    tol: f64,
    out: Option<&PathBuf>,
    format: Format,
) -> Result<ExitCode, String> {
    if trials == 0 {
        return Err("trials must be at least 1".into());
    }
    let theorems = theorem_suite(seed, trials, tol).map_err(|e| e.to_string())?;
    let uniform = uniform_fl_suite(seed, trials, 0.1).map_err(|e| e.to_string())?;
    let chain = implication_chain_suite(seed, trials, 0.15).map_err(|e| e.to_string())?;

    let mut report = Report::new("random-suite");
    report.summarize("seed", seed.to_string());
    report.summarize("trials", trials.to_string());
    report.summarize("tol", fmt_f64(tol));
    for tally in theorems.tallies.iter().chain(&uniform.tallies) {
        report.summarize(format!("engine.{}.trials", tally.engine), tally.trials.to_string());
        report.summarize(format!("engine.{}.pass", tally.engine), tally.pass.to_string());
        report.summarize(format!("engine.{}.fail", tally.engine), tally.fail.to_string());
        report.summarize(
            format!("engine.{}.inapplicable", tally.engine),
            tally.inapplicable.to_string(),
        );
        report.summarize(format!("engine.{}.bug", tally.engine), tally.bug.to_string());
    }
    report.summarize("uniform.gap_mismatches", uniform.gap_mismatches.to_string());
    report.summarize("chain.sequences", chain.sequences.to_string());
    report.summarize("chain.violations", chain.violations.to_string());
    let bug_total = theorems.bug_total + uniform.bug_total;
    report.summarize("bug_total", bug_total.to_string());
    report.extend(theorems.bug_examples.clone());
    emit(&report, out, format)?;

    let clean = bug_total == 0 && uniform.gap_mismatches == 0 && chain.violations == 0;
    Ok(if clean { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn parse_alphas(raw: Option<&str>) -> Result<Vec<f64>, String> {
    match raw {
        None => Ok(default_alpha_schedule()),
        Some(list) => {
            let alphas: Result<Vec<f64>, _> =
                list.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let alphas = alphas.map_err(|e| format!("bad --alphas entry: {e}"))?;
            if alphas.is_empty() || alphas.iter().any(|&a| !(0.0..1.0).contains(&a)) {
                return Err("--alphas must be nonempty discounts in [0, 1)".into());
            }
            Ok(alphas)
        }
    }
}

fn cmd_solve_mdp(
    model_path: &PathBuf,
    alphas: Option<&str>,
    eps: f64,
    oracle: bool,
    out: Option<&PathBuf>,
    format: Format,
) -> Result<ExitCode, String> {
    let raw = std::fs::read_to_string(model_path)
        .map_err(|e| format!("reading {}: {e}", model_path.display()))?;
    let doc: MdpDocument =
        serde_json::from_str(&raw).map_err(|e| format!("parsing model document: {e}"))?;
    let model = doc.to_model().map_err(|e| format!("invalid model: {e}"))?;
    let alphas = parse_alphas(alphas)?;

    let sweep = vanishing_discount_sweep(&model, &alphas, eps).map_err(|e| e.to_string())?;
    let states = model.states().clone();
    let radii = RadiusSchedule::fine_for(&states);
    let (u_point, v_point) =
        limit_relative_value(&sweep, &states, LimitMode::Pointwise, &radii, LIMIT_TOL);
    let (_u_double, v_double) =
        limit_relative_value(&sweep, &states, LimitMode::Double, &radii, LIMIT_TOL);

    let mut report = Report::new(format!("solve-mdp {}", model_path.display()));
    let mut exit = ExitCode::SUCCESS;

    let mut w_star = (sweep.w_lower + sweep.w_upper) / 2.0;
    if oracle {
        let (w_oracle, _u_oracle, _p) = average_cost_oracle(&model).map_err(|e| e.to_string())?;
        report.summarize_f64("w_oracle", w_oracle);
        let gap = (sweep.w_lower - w_oracle).abs().max((sweep.w_upper - w_oracle).abs());
        report.summarize_f64("oracle_gap", gap);
        if gap > ORACLE_AGREEMENT {
            report.summarize("oracle_agreement", "mismatch");
            exit = ExitCode::from(1);
        } else {
            report.summarize("oracle_agreement", "ok");
        }
        w_star = w_oracle;
    }

    let policy = sweep.policies.last().expect("nonempty schedule").clone();
    let acoi = acoi_residual(&model, &u_point, w_star, &policy);
    let (acoe, greedy) = acoe_residual(&model, &u_point, w_star);
    let b_verdict = assumption_b_check(&sweep, ExtReal::new(w_star));
    let lec_verdict =
        assumption_lec_check(&sweep, &model, &radii, LIMIT_TOL).map_err(|e| e.to_string())?;
    let chain_verdict = eq_chain_check(&model, &sweep, w_star, &policy, LIMIT_TOL)
        .map_err(|e| e.to_string())?;

    report.summarize_f64("w_lower", sweep.w_lower);
    report.summarize_f64("w_upper", sweep.w_upper);
    report.summarize_f64("w_star", w_star);
    for (x, &ux) in u_point.iter().enumerate() {
        report.summarize(format!("u.{x}"), fmt_f64(ux));
    }
    for x in 0..model.n_states() {
        report.summarize(
            format!("policy.{x}"),
            model.action_names()[policy.action(x)].clone(),
        );
        report.summarize(
            format!("greedy.{x}"),
            model.action_names()[greedy.action(x)].clone(),
        );
    }
    let acoi_max = acoi.iter().map(|r| r.abs()).max().unwrap_or(ExtReal::ZERO);
    let acoe_max = acoe.iter().fold(0.0f64, |m, &r| m.max(r.abs()));
    report.summarize("acoi_max_residual", acoi_max.to_string());
    report.summarize_f64("acoe_max_gap", acoe_max);
    report.push(v_point);
    report.push(v_double);
    report.push(b_verdict);
    report.push(lec_verdict);
    report.push(chain_verdict);
    emit(&report, out, format)?;
    Ok(exit)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = worker_cap() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let result = match &cli.command {
        Command::Verify { fixture, out, format } => cmd_verify(fixture, out.as_ref(), *format),
        Command::RandomSuite { seed, trials, tol, out, format } => {
            cmd_random_suite(*seed, *trials, *tol, out.as_ref(), *format)
        }
        Command::SolveMdp { model, alphas, tol, oracle, out, format } => {
            cmd_solve_mdp(model, alphas.as_deref(), *tol, *oracle, out.as_ref(), *format)
        }
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
