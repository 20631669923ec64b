use std::fmt::Write as _;

use orliczkit::constants::{
    c0_of_phi, certify_forward_hypotheses, hardy_s_constant, hardy_t_constant, k1_phi, k_p_phi_backward,
    k_p_phi_forward, k_pq_classical, Classification, Tau, Triple,
};
use orliczkit::function::{PiecewiseLinearFunction, RealFunction, StepFunction};
use orliczkit::gauge::{gauge_norm, GaugeConfig};
use orliczkit::showcase::{run_example_on, split_sweep};
use orliczkit::verify::{
    certification_report, extremal_p, extremal_p1, random_test_functions, CertifyOptions, PoincareInstance,
    TestFunction,
};
use orliczkit::young::{certify_young, logbump_branch_derivatives, ComplementaryFunction, Young, YoungSpec};
use orliczkit::Error;
use serde::Serialize;

use crate::config::{
    load, CheckYoungConfig, ComplementaryConfig, ConstantConfig, ConstantKind, ExampleRunConfig, FunctionConfig,
    NormConfig, TauKind, VerifyConfig,
};
use crate::output::{envelope, trace_files, Run};
use crate::{Common, Failure};

fn config_err(e: Error) -> Failure {
    Failure::Config(e.to_string())
}

fn run(command: &'static str, report: serde_json::Value) -> Run {
    Run {
        command,
        report,
        files: Vec::new(),
        exit_code: 0,
        notes: Vec::new(),
    }
}

#[derive(Serialize)]
struct NormResult {
    #[serde(flatten)]
    norm: orliczkit::gauge::GaugeNorm,
    modular_within_tolerance: bool,
}

pub fn norm(common: &Common) -> Result<Run, Failure> {
    let cfg: NormConfig = load(common.config.as_deref()).map_err(Failure::Config)?;
    let (a, b) = (cfg.mu.a(), cfg.mu.b());
    let f: Box<dyn RealFunction> = match &cfg.function {
        FunctionConfig::PiecewiseLinear { knots, values } => {
            Box::new(PiecewiseLinearFunction::new(knots.clone(), values.clone()).map_err(config_err)?)
        }
        FunctionConfig::Step { breaks, levels } => {
            Box::new(StepFunction::new(breaks.clone(), levels.clone()).map_err(config_err)?)
        }
        FunctionConfig::Indicator { lo, hi, value } => {
            Box::new(StepFunction::indicator(a, b, *lo, *hi, *value).map_err(config_err)?)
        }
    };
    let g = gauge_norm(f.as_ref(), &cfg.phi, &cfg.mu, &GaugeConfig::default())?;
    let result = NormResult {
        norm: g,
        modular_within_tolerance: g.modular_at_norm <= 1.0 + 1e-9,
    };
    Ok(run("norm", envelope("norm", &cfg, &result).map_err(Failure::Runtime)?))
}

pub fn constant(common: &Common) -> Result<Run, Failure> {
    let mut cfg: ConstantConfig = load(common.config.as_deref()).map_err(Failure::Config)?;
    if let Some(policy) = common.grid {
        cfg.grid.policy = policy;
    }
    let cfg = cfg.resolve();
    cfg.grid.validate().map_err(config_err)?;
    let nu = cfg.nu.clone().expect("resolved");
    let w = cfg.w.clone().expect("resolved");
    if cfg.constant == ConstantKind::C0 {
        let c0 = c0_of_phi(&cfg.phi)?;
        return Ok(run("constant", envelope("constant", &cfg, &serde_json::json!({ "c0": c0 })).map_err(Failure::Runtime)?));
    }
    let triple = || Triple::new(cfg.mu.clone(), nu.clone(), w.clone()).map_err(config_err);
    let tau = match cfg.tau {
        TauKind::Unit => Tau::Unit,
        TauKind::NuLeft => Tau::NuLeft(nu.clone()),
        TauKind::NuRight => Tau::NuRight(nu.clone()),
    };
    let report = match cfg.constant {
        ConstantKind::K1 => k1_phi(&triple()?, &cfg.phi, &cfg.grid),
        ConstantKind::Forward => k_p_phi_forward(&triple()?, cfg.p, &cfg.phi, &cfg.grid),
        ConstantKind::Backward => k_p_phi_backward(&triple()?, cfg.p, &cfg.phi, &cfg.grid),
        ConstantKind::Classical => k_pq_classical(&triple()?, cfg.p, cfg.q.expect("resolved"), &cfg.grid),
        ConstantKind::HardyS => hardy_s_constant(cfg.p, &cfg.phi, &cfg.mu, &tau, &w, &cfg.grid),
        ConstantKind::HardyT => hardy_t_constant(cfg.p, &cfg.phi, &cfg.mu, &tau, &w, &cfg.grid),
        ConstantKind::C0 => unreachable!(),
    };
    let report = match report {
        Ok(r) => r,
        Err(e @ (Error::Invalid(_) | Error::ZeroTotalMass)) => return Err(config_err(e)),
        Err(e @ Error::HypothesisViolation(_)) => {
            return Ok(Run {
                exit_code: 2,
                notes: vec![format!("hypothesis violation: {e}")],
                ..run(
                    "constant",
                    envelope("constant", &cfg, &serde_json::json!({ "error": e.to_string() })).map_err(Failure::Runtime)?,
                )
            })
        }
        Err(e) => return Err(e.into()),
    };
    let mut out = run("constant", envelope("constant", &cfg, &report).map_err(Failure::Runtime)?);
    out.files = trace_files("constant", &report);
    if report.classification == Classification::Diverging {
        out.exit_code = 3;
        out.notes.push(format!("{}: supremum diverging", report.constant));
    }
    Ok(out)
}

fn extremal_family(inst: &PoincareInstance, cfg: &VerifyConfig) -> (Vec<TestFunction>, Vec<String>) {
    let (a, b) = (inst.a(), inst.b());
    let ex = &cfg.extremals;
    let mut alphas = ex.alphas.clone();
    let k = ex.alpha_count;
    alphas.extend((1..=k).map(|i| a + (b - a) * i as f64 / (k + 1) as f64));
    let mut family = Vec::new();
    let mut notes = Vec::new();
    for alpha in alphas {
        let made = if inst.p == 1.0 {
            let eps = ex.eps.min(0.5 * (alpha - a).min(b - alpha));
            extremal_p1(inst, alpha, eps, ex.n).map(|f| vec![f])
        } else {
            extremal_p(inst, alpha, ex.n).map(|(f1, f2)| vec![f1, f2])
        };
        match made {
            Ok(fs) => family.extend(fs),
            Err(e) => notes.push(format!("extremal at alpha={alpha} skipped: {e}")),
        }
    }
    (family, notes)
}

pub fn verify(common: &Common) -> Result<Run, Failure> {
    let mut cfg: VerifyConfig = load(common.config.as_deref()).map_err(Failure::Config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(policy) = common.grid {
        cfg.grid.policy = policy;
    }
    let cfg = cfg.resolve();
    cfg.grid.validate().map_err(config_err)?;
    let inst = PoincareInstance::new(
        cfg.mu.clone(),
        cfg.nu.clone().expect("resolved"),
        cfg.w.clone().expect("resolved"),
        cfg.p,
        cfg.phi.clone(),
    )
    .map_err(config_err)?;
    let mut family = random_test_functions(cfg.seed, cfg.family.count, cfg.family.knot_budget, inst.a(), inst.b())
        .map_err(config_err)?;
    let (extremals, mut notes) = extremal_family(&inst, &cfg);
    family.extend(extremals);
    let opts = CertifyOptions {
        grid: cfg.grid,
        necessity: cfg.necessity,
    };
    let mut report = certification_report(&inst, &family, &opts)?;
    report.diagnostics.extend(notes.iter().cloned());
    let mut csv = String::from("id,ratio\n");
    for r in &report.records {
        let _ = writeln!(csv, "{},{}", r.id, r.ratio);
    }
    let mut out = run("verify", envelope("verify", &cfg, &report).map_err(Failure::Runtime)?);
    out.files.push(("verify-ratios.csv".into(), csv));
    if !report.passed {
        out.exit_code = 2;
        notes.push(format!("bound violated by: {}", report.violations.join(", ")));
        if !report.lower_bound_consistent {
            notes.push("an extremal ratio fell below its proven lower bound".into());
        }
    }
    out.notes = notes;
    Ok(out)
}

#[derive(Serialize)]
struct ExampleResult {
    report: orliczkit::showcase::ExampleReport,
    split: orliczkit::showcase::SplitSweep,
}

pub fn example(common: &Common) -> Result<Run, Failure> {
    let mut cfg: ExampleRunConfig = load(common.config.as_deref()).map_err(Failure::Config)?;
    if let Some(policy) = common.grid {
        cfg.grid.policy = policy;
    }
    cfg.example.validate().map_err(config_err)?;
    cfg.grid.validate().map_err(config_err)?;
    cfg.example = cfg.example.resolved();
    let report = match run_example_on(&cfg.example, &cfg.grid) {
        Ok(r) => r,
        Err(e @ Error::HypothesisViolation(_)) => {
            return Ok(Run {
                command: "example",
                report: envelope("example", &cfg, &serde_json::json!({ "error": e.to_string() })).map_err(Failure::Runtime)?,
                files: Vec::new(),
                exit_code: 2,
                notes: vec![format!("hypothesis violation: {e}")],
            })
        }
        Err(e) => return Err(e.into()),
    };
    let split = split_sweep(&cfg.example, cfg.sweep.x_hi, cfg.sweep.x_lo, cfg.sweep.count).map_err(|e| match e {
        Error::Invalid(_) => config_err(e),
        e => e.into(),
    })?;
    let mut files = trace_files("example-pp", &report.classical_pp);
    files.extend(trace_files("example-pq", &report.classical_pq));
    files.extend(trace_files("example-phi", &report.logbump_forward));
    let mut overlay = String::from("x,t0,ln_supremand,ln_lower_bound\n");
    for o in &report.overlay {
        let _ = writeln!(overlay, "{},{},{},{}", o.x, o.t0, o.ln_supremand, o.ln_lower_bound);
    }
    files.push(("example-overlay.csv".into(), overlay));
    let mut sweep = String::from("x,delta,tail,i,i_bound,ii,ii_bound\n");
    for s in &split.points {
        let _ = writeln!(sweep, "{},{},{},{},{},{},{}", s.x, s.delta, s.tail, s.i, s.i_bound, s.ii, s.ii_bound);
    }
    files.push(("example-split.csv".into(), sweep));
    let mut notes = report.diagnostics.clone();
    let consistent = report.pattern_matches && report.overlay_holds && split.all_hold;
    if !split.all_hold {
        notes.push("split-integral bounds failed at some sampled x".into());
    }
    let result = ExampleResult { report, split };
    Ok(Run {
        command: "example",
        report: envelope("example", &cfg, &result).map_err(Failure::Runtime)?,
        files,
        exit_code: if consistent { 0 } else { 1 },
        notes,
    })
}

#[derive(Serialize)]
struct CheckYoungResult {
    young: orliczkit::young::YoungCertificate,
    forward_hypotheses: Option<orliczkit::constants::HypothesisReport>,
    /// Left and right derivatives at the log-bump branch point `e^{2α}`.
    branch_derivatives: Option<(f64, f64)>,
    passed: bool,
}

pub fn check_young(common: &Common) -> Result<Run, Failure> {
    let cfg: CheckYoungConfig = load(common.config.as_deref()).map_err(Failure::Config)?;
    if let Some(p) = cfg.p {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Failure::Config(format!("p must exceed 1, got {p}")));
        }
    }
    let young = certify_young(&cfg.phi, &cfg.grid);
    let forward_hypotheses = cfg.p.map(|p| certify_forward_hypotheses(&cfg.phi, p, &cfg.grid));
    let branch_derivatives = match cfg.phi.spec() {
        YoungSpec::Logbump { p, alpha } => Some(logbump_branch_derivatives(*p, *alpha)),
        _ => None,
    };
    let passed = young.passed
        && forward_hypotheses.as_ref().is_none_or(|h| h.passed)
        && branch_derivatives.is_none_or(|(l, r)| l <= r);
    let result = CheckYoungResult {
        young,
        forward_hypotheses,
        branch_derivatives,
        passed,
    };
    let mut out = run("check-young", envelope("check-young", &cfg, &result).map_err(Failure::Runtime)?);
    if !passed {
        out.exit_code = 2;
        out.notes.push(format!("{}: at least one certificate failed", cfg.phi.label()));
    }
    Ok(out)
}

#[derive(Serialize)]
struct PsiRow {
    s: f64,
    #[serde(with = "orliczkit::ext")]
    psi: f64,
    error: Option<String>,
}

pub fn complementary(common: &Common) -> Result<Run, Failure> {
    let cfg: ComplementaryConfig = load(common.config.as_deref()).map_err(Failure::Config)?;
    let psi = ComplementaryFunction::new(cfg.phi.clone());
    let rows: Vec<PsiRow> = cfg
        .s
        .iter()
        .map(|&s| match psi.value(s) {
            Ok(v) => PsiRow { s, psi: v, error: None },
            Err(e) => PsiRow {
                s,
                psi: f64::INFINITY,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let mut csv = String::from("s,psi\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{}", r.s, r.psi);
    }
    let label = psi.label();
    let mut out = run(
        "complementary",
        envelope("complementary", &cfg, &serde_json::json!({ "label": label, "table": rows })).map_err(Failure::Runtime)?,
    );
    out.files.push(("complementary.csv".into(), csv));
    Ok(out)
}
