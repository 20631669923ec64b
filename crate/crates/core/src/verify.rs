//! Empirical checks of the Poincaré inequalities: ratios of the gauge-norm
//! deviation to the weighted `L^p` norm of the derivative, for random
//! piecewise-linear functions and for the extremal families used in the
//! necessity arguments.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{
    c0_of_phi, certify_forward_hypotheses, k1_phi, k_p_phi_backward, k_p_phi_forward, Classification, ConstantReport,
    Triple,
};
use crate::error::{invalid, Error, Result};
use crate::function::{PiecewiseLinearFunction, StepFunction};
use crate::gauge::{gauge_norm, GaugeConfig};
use crate::grid::GridSpec;
use crate::measure::{weighted_average, MeasureSpec};
use crate::quadrature::{integrate, QuadratureConfig};
use crate::young::{CertificateGrid, ConjugateExponent, Young, YoungFunction};

/// Sample count used for the extremal functions.
pub const EXTREMAL_SAMPLES: usize = 4096;
/// Default regularization `w_n = w + 1/n`.
pub const DEFAULT_N: f64 = 1e9;
/// Smallest tolerance applied to any bound check.
pub const MIN_TOLERANCE: f64 = 1e-6;

const LHS_REL_ERROR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareInstance {
    pub mu: MeasureSpec,
    pub nu: MeasureSpec,
    pub w: MeasureSpec,
    pub p: f64,
    pub phi: YoungFunction,
}

impl PoincareInstance {
    pub fn new(mu: MeasureSpec, nu: MeasureSpec, w: MeasureSpec, p: f64, phi: YoungFunction) -> Result<Self> {
        Triple::new(mu.clone(), nu.clone(), w.clone())?;
        if !(p >= 1.0 && p.is_finite()) {
            return invalid(format!("p must be finite and >= 1, got {p}"));
        }
        Ok(Self { mu, nu, w, p, phi })
    }

    pub fn triple(&self) -> Triple {
        Triple {
            mu: self.mu.clone(),
            nu: self.nu.clone(),
            w: self.w.clone(),
        }
    }

    pub fn a(&self) -> f64 {
        self.mu.a()
    }

    pub fn b(&self) -> f64 {
        self.mu.b()
    }

    fn w_n(&self, n: f64, t: f64) -> f64 {
        self.w.density_at(t) + 1.0 / n
    }
}

/// Derivative of a test function: the piecewise-linear slopes, or an exact
/// integrand (for the extremal families).
#[derive(Clone)]
pub enum Derivative {
    Slopes,
    Exact(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Derivative {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Derivative::Slopes => f.write_str("Slopes"),
            Derivative::Exact(_) => f.write_str("Exact"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TestFunction {
    pub id: String,
    pub shape: PiecewiseLinearFunction,
    pub derivative: Derivative,
    /// A quantity the ratio provably dominates, when one is known.
    pub lower_bound: Option<f64>,
}

impl TestFunction {
    pub fn piecewise_linear(id: impl Into<String>, f: PiecewiseLinearFunction) -> Self {
        Self {
            id: id.into(),
            shape: f,
            derivative: Derivative::Slopes,
            lower_bound: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRecord {
    pub id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub lhs_error: f64,
    pub rhs_error: f64,
    pub lower_bound: Option<f64>,
}

impl RatioRecord {
    /// `max(1e-6, 3 × propagated error)`.
    pub fn tolerance(&self) -> f64 {
        if self.rhs == 0.0 {
            return MIN_TOLERANCE;
        }
        let err = self.lhs_error / self.rhs + self.ratio * self.rhs_error / self.rhs;
        MIN_TOLERANCE.max(3.0 * err)
    }
}

/// `(∫ |f'|^p w)^{1/p}` and its error estimate.
fn derivative_norm(inst: &PoincareInstance, tf: &TestFunction) -> Result<(f64, f64)> {
    let p = inst.p;
    match &tf.derivative {
        Derivative::Slopes => {
            let knots = tf.shape.knots();
            let mut sum = 0.0;
            for (k, s) in knots.windows(2).zip(tf.shape.slopes()) {
                let (lo, hi) = (k[0].max(inst.a()), k[1].min(inst.b()));
                if hi > lo && s != 0.0 {
                    sum += s.abs().powf(p) * inst.w.density_mass(lo, hi)?;
                }
            }
            let rhs = sum.powf(1.0 / p);
            Ok((rhs, 1e-13 * rhs))
        }
        Derivative::Exact(d) => {
            let mut pts: Vec<f64> = tf.shape.knots().to_vec();
            pts.extend(inst.w.breakpoints());
            pts.push(inst.a());
            pts.push(inst.b());
            pts.retain(|&x| inst.a() <= x && x <= inst.b());
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            let cells: Vec<f64> = pts
                .par_windows(2)
                .map(|c| inst.w.integrate_density(|t| d(t).abs().powf(p), c[0], c[1], &[]))
                .collect::<Result<_>>()?;
            let sum: f64 = cells.iter().sum();
            if !sum.is_finite() {
                return Err(Error::NonFinite(format!("derivative norm of {}", tf.id)));
            }
            let rhs = sum.powf(1.0 / p);
            Ok((rhs, 1e-9 * rhs))
        }
    }
}

pub fn test_function_ratio(inst: &PoincareInstance, tf: &TestFunction) -> Result<RatioRecord> {
    let avg = weighted_average(&tf.shape, &inst.nu)?;
    let dev = tf.shape.shifted(-avg);
    let lhs = gauge_norm(&dev, &inst.phi, &inst.mu, &GaugeConfig::default())?.norm;
    let (rhs, rhs_error) = derivative_norm(inst, tf)?;
    let scale = tf.shape.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lhs_error = LHS_REL_ERROR * lhs + 1e-13 * scale;
    let ratio = if rhs > 0.0 {
        lhs / rhs
    } else if lhs <= 1e-12 * scale.max(1.0) {
        0.0
    } else {
        return Err(Error::DegenerateTestFunction { id: tf.id.clone(), lhs });
    };
    Ok(RatioRecord {
        id: tf.id.clone(),
        lhs,
        rhs,
        ratio,
        lhs_error,
        rhs_error,
        lower_bound: tf.lower_bound,
    })
}

/// `‖f - avg_ν f‖_{Φ,μ} / ‖f'‖_{L^p_w}` for a piecewise-linear `f`.
pub fn poincare_ratio(inst: &PoincareInstance, f: &PiecewiseLinearFunction) -> Result<RatioRecord> {
    test_function_ratio(inst, &TestFunction::piecewise_linear("f", f.clone()))
}

fn uniform_points(lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    (0..=cells).map(|i| lo + (hi - lo) * i as f64 / cells as f64).collect()
}

fn check_alpha(inst: &PoincareInstance, alpha: f64) -> Result<()> {
    let bad = |reason: &str| {
        Err(Error::BadAlpha {
            alpha,
            reason: reason.to_string(),
        })
    };
    if !(inst.a() < alpha && alpha < inst.b()) {
        return bad("alpha must lie strictly inside (a, b)");
    }
    if inst.nu.atoms().iter().any(|&(x, m)| x == alpha && m > 0.0) {
        return bad("alpha is an atom of nu");
    }
    if inst.w.breakpoints().contains(&alpha) {
        return bad("alpha is a breakpoint of w (Lebesgue point of 1/w_n not guaranteed)");
    }
    Ok(())
}

/// The `p = 1` extremal `f_ε` built on `w_n = w + 1/n`.
pub fn extremal_p1(inst: &PoincareInstance, alpha: f64, eps: f64, n: f64) -> Result<TestFunction> {
    check_alpha(inst, alpha)?;
    let (a, b) = (inst.a(), inst.b());
    if !(eps > 0.0 && eps < (alpha - a).min(b - alpha)) {
        return invalid(format!("eps must lie in (0, {}), got {eps}", (alpha - a).min(b - alpha)));
    }
    if !(n >= 1.0) {
        return invalid(format!("n must be a positive integer, got {n}"));
    }
    let left_mass = inst.nu.mass_left(alpha);
    if !(left_mass > 0.0) {
        return Err(Error::BadAlpha {
            alpha,
            reason: "nu[a, alpha] = 0".into(),
        });
    }
    let c = inst.nu.mass_right(alpha) / left_mass;
    let inst_c = inst.clone();
    let deriv = move |t: f64| {
        if alpha - eps <= t && t < alpha {
            c / (eps * inst_c.w_n(n, t))
        } else if alpha <= t && t <= alpha + eps {
            1.0 / (eps * inst_c.w_n(n, t))
        } else {
            0.0
        }
    };
    let half = EXTREMAL_SAMPLES / 2;
    let left = uniform_points(alpha - eps, alpha, half);
    let right = uniform_points(alpha, alpha + eps, half);
    let q = QuadratureConfig::default();
    let cell = |lo: f64, hi: f64| integrate(|t| 1.0 / (eps * inst.w_n(n, t)), lo, hi, &q).map(|e| e.value);
    let left_cells: Vec<f64> = left.par_windows(2).map(|c| cell(c[0], c[1])).collect::<Result<_>>()?;
    let right_cells: Vec<f64> = right.par_windows(2).map(|c| cell(c[0], c[1])).collect::<Result<_>>()?;

    let mut knots = Vec::with_capacity(EXTREMAL_SAMPLES + 3);
    let mut values = Vec::with_capacity(EXTREMAL_SAMPLES + 3);
    // left branch: -c ∫_x^α, accumulated backwards from α
    let mut acc = 0.0;
    let mut lv = vec![0.0; left.len()];
    for i in (0..left_cells.len()).rev() {
        acc += left_cells[i];
        lv[i] = -c * acc;
    }
    if alpha - eps > a {
        knots.push(a);
        values.push(lv[0]);
    }
    knots.extend_from_slice(&left);
    values.extend_from_slice(&lv);
    let mut acc = 0.0;
    for (i, x) in right.iter().enumerate().skip(1) {
        acc += right_cells[i - 1];
        knots.push(*x);
        values.push(acc);
    }
    if alpha + eps < b {
        knots.push(b);
        values.push(acc);
    }
    Ok(TestFunction {
        id: format!("f_eps(alpha={alpha}, eps={eps}, n={n})"),
        shape: PiecewiseLinearFunction::new(knots, values)?,
        derivative: Derivative::Exact(Arc::new(deriv)),
        lower_bound: None,
    })
}

/// The `ε → 0` limit of the `f_ε` ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P1Limit {
    /// `(1/w_n(α)) ‖(ν[α,b]/ν[a,α]) χ_{[a,α]} + χ_{[α,b]}‖_{Φ,μ}`
    pub lhs: f64,
    /// `ν[a,b]/ν[a,α]`
    pub rhs: f64,
    pub ratio: f64,
}

pub fn extremal_p1_limit(inst: &PoincareInstance, alpha: f64, n: f64) -> Result<P1Limit> {
    check_alpha(inst, alpha)?;
    let left_mass = inst.nu.mass_left(alpha);
    if !(left_mass > 0.0) {
        return Err(Error::BadAlpha {
            alpha,
            reason: "nu[a, alpha] = 0".into(),
        });
    }
    let c = inst.nu.mass_right(alpha) / left_mass;
    let step = StepFunction::two_level(inst.a(), alpha, inst.b(), c, 1.0, c + 1.0)?;
    let norm = gauge_norm(&step, &inst.phi, &inst.mu, &GaugeConfig::default())?.norm;
    let lhs = norm / inst.w_n(n, alpha);
    let rhs = inst.nu.total_mass() / left_mass;
    Ok(P1Limit { lhs, rhs, ratio: lhs / rhs })
}

/// The `p > 1` extremals `f₁` (supported on `[a, α]`) and `f₂` (on `[α, b]`),
/// each carrying the lower bound its ratio must exceed.
pub fn extremal_p(inst: &PoincareInstance, alpha: f64, n: f64) -> Result<(TestFunction, TestFunction)> {
    if !(inst.p > 1.0) {
        return invalid("extremal_p needs p > 1");
    }
    if !(inst.a() < alpha && alpha < inst.b()) {
        return Err(Error::BadAlpha {
            alpha,
            reason: "alpha must lie strictly inside (a, b)".into(),
        });
    }
    if !(n >= 1.0) {
        return invalid(format!("n must be a positive integer, got {n}"));
    }
    let pp = ConjugateExponent::new(inst.p)?.p_prime;
    let total = inst.nu.total_mass();
    let f1 = extremal_branch(inst, alpha, n, pp, true)?;
    let f2 = extremal_branch(inst, alpha, n, pp, false)?;
    let lb = |integral: f64, tail: f64| -> Result<f64> {
        if tail <= 0.0 || integral == 0.0 {
            return Ok(0.0);
        }
        Ok(integral.powf(1.0 / pp) / inst.phi.invert(1.0 / tail)? / total)
    };
    let lb1 = lb(f1.1, inst.mu.interval_mass(alpha, inst.b())?)?;
    let lb2 = lb(f2.1, inst.mu.interval_mass(inst.a(), alpha)?)?;
    let (mut t1, mut t2) = (f1.0, f2.0);
    t1.lower_bound = Some(lb1);
    t2.lower_bound = Some(lb2);
    Ok((t1, t2))
}

/// Returns the test function and `∫ τ^{p'} w_n^{1-p'}` over its support.
fn extremal_branch(inst: &PoincareInstance, alpha: f64, n: f64, pp: f64, first: bool) -> Result<(TestFunction, f64)> {
    let (a, b) = (inst.a(), inst.b());
    let (lo, hi) = if first { (a, alpha) } else { (alpha, b) };
    let inst_c = inst.clone();
    // (ln τ(t), ln f'(t)) with τ = ν[a,t] or ν[t,b]
    let ln_parts = Arc::new(move |t: f64| {
        let lt = if first {
            inst_c.nu.ln_mass_left(t)
        } else {
            inst_c.nu.ln_mass_right(t)
        };
        if lt == f64::NEG_INFINITY {
            (lt, lt)
        } else {
            (lt, (pp - 1.0) * lt + (1.0 - pp) * inst_c.w_n(n, t).ln())
        }
    });
    let mut pts = uniform_points(lo, hi, EXTREMAL_SAMPLES);
    pts.extend(inst.nu.breakpoints().into_iter().chain(inst.w.breakpoints()).filter(|&x| lo < x && x < hi));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let q = QuadratureConfig::default();
    let parts = ln_parts.clone();
    // per cell: ∫ f' and ∫ τ^{p'} w_n^{1-p'} = ∫ τ f'
    let cells: Vec<(f64, f64)> = pts
        .par_windows(2)
        .map(|c| {
            let f = integrate(|t| parts(t).1.exp(), c[0], c[1], &q)?.value;
            let g = integrate(
                |t| {
                    let (lt, ld) = parts(t);
                    (lt + ld).exp()
                },
                c[0],
                c[1],
                &q,
            )?
            .value;
            Ok((f, g))
        })
        .collect::<Result<_>>()?;
    let integral: f64 = cells.iter().map(|c| c.1).sum();
    if !integral.is_finite() || cells.iter().any(|c| !c.0.is_finite()) {
        return Err(Error::NonIntegrableIntegrand { lo, hi });
    }
    let mut knots = Vec::with_capacity(pts.len() + 1);
    let mut values = Vec::with_capacity(pts.len() + 1);
    if !first {
        knots.push(a);
        values.push(0.0);
    }
    let mut acc = 0.0;
    for (i, x) in pts.iter().enumerate() {
        if i > 0 {
            acc += cells[i - 1].0;
        }
        knots.push(*x);
        values.push(acc);
    }
    if first {
        knots.push(b);
        values.push(acc);
    }
    let deriv = move |t: f64| if lo <= t && t <= hi { ln_parts(t).1.exp() } else { 0.0 };
    let id = if first { "f1" } else { "f2" };
    Ok((
        TestFunction {
            id: format!("{id}(alpha={alpha}, n={n})"),
            shape: PiecewiseLinearFunction::new(knots, values)?,
            derivative: Derivative::Exact(Arc::new(deriv)),
            lower_bound: None,
        },
        integral,
    ))
}

/// Distribution used for each member of a random family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyVariant {
    /// Knots uniform in `(a, b)`, slopes uniform in `[-1, 1]`.
    Uniform,
    /// Knots clustered geometrically toward `a`; slope `±1` on the piece
    /// touching `a`, slopes in `[-0.01, 0.01]` elsewhere.
    SpikeA,
    SpikeB,
}

/// Deterministic random piecewise-linear functions on `[a, b]`. Each has
/// between 1 and `knot_budget` pieces; three out of four are
/// [`FamilyVariant::Uniform`], the rest spikes toward a random endpoint.
pub fn random_family(
    seed: u64,
    count: usize,
    knot_budget: usize,
    a: f64,
    b: f64,
) -> Result<Vec<(FamilyVariant, PiecewiseLinearFunction)>> {
    if count == 0 || knot_budget == 0 {
        return invalid("count and knot_budget must be >= 1");
    }
    if !(a < b) {
        return invalid("need a < b");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let pieces = rng.gen_range(1..=knot_budget);
        let variant = if rng.gen_bool(0.75) {
            FamilyVariant::Uniform
        } else if rng.gen_bool(0.5) {
            FamilyVariant::SpikeA
        } else {
            FamilyVariant::SpikeB
        };
        let start: f64 = rng.gen_range(-1.0..=1.0);
        let f = loop {
            let mut knots = vec![a, b];
            let mut slopes: Vec<f64>;
            match variant {
                FamilyVariant::Uniform => {
                    knots.extend((1..pieces).map(|_| rng.gen_range(a..b)));
                    slopes = (0..pieces).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                }
                FamilyVariant::SpikeA | FamilyVariant::SpikeB => {
                    let toward_a = variant == FamilyVariant::SpikeA;
                    knots.extend((1..pieces).map(|_| {
                        let d = (b - a) * 10f64.powf(-rng.gen_range(0.5..6.0));
                        if toward_a {
                            a + d
                        } else {
                            b - d
                        }
                    }));
                    slopes = (0..pieces).map(|_| rng.gen_range(-0.01..=0.01)).collect();
                    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    let idx = if toward_a { 0 } else { pieces - 1 };
                    slopes[idx] = sign;
                }
            }
            knots.sort_by(f64::total_cmp);
            knots.dedup();
            if knots.len() != pieces + 1 {
                continue;
            }
            if let Ok(f) = PiecewiseLinearFunction::from_slopes(knots, &slopes, start) {
                break f;
            }
            slopes.clear();
        };
        out.push((variant, f));
    }
    Ok(out)
}

/// Random family wrapped as test functions with ids `{variant}-{index}`.
pub fn random_test_functions(seed: u64, count: usize, knot_budget: usize, a: f64, b: f64) -> Result<Vec<TestFunction>> {
    Ok(random_family(seed, count, knot_budget, a, b)?
        .into_iter()
        .enumerate()
        .map(|(i, (v, f))| {
            let tag = match v {
                FamilyVariant::Uniform => "uniform",
                FamilyVariant::SpikeA => "spike-a",
                FamilyVariant::SpikeB => "spike-b",
            };
            TestFunction::piecewise_linear(format!("{tag}-{i}"), f)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub id: String,
    pub ratio: f64,
    #[serde(with = "crate::ext")]
    pub bound: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub p: f64,
    pub phi: String,
    /// `"2 K_1"` or `"C0 K_p forward"`; `None` when no sufficiency bound applies.
    pub bound_kind: Option<String>,
    #[serde(with = "crate::ext")]
    pub bound: f64,
    pub c0: Option<f64>,
    /// K_{1,Φ} for p = 1, forward K_{p,Φ} for p > 1 (when hypotheses pass).
    pub sufficiency_constant: Option<ConstantReport>,
    /// Backward constant (p > 1); any valid Poincaré constant is at least half of it.
    pub necessity_constant: Option<ConstantReport>,
    pub hypotheses_passed: Option<bool>,
    pub records: Vec<RatioRecord>,
    pub checks: Vec<BoundCheck>,
    /// Largest observed ratio (a lower bound for the best constant).
    pub empirical_c: f64,
    /// Largest lower bound carried by an extremal function.
    pub max_lower_bound: Option<f64>,
    /// `max_lower_bound <= empirical_c + tolerance`.
    pub lower_bound_consistent: bool,
    pub violations: Vec<String>,
    pub passed: bool,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertifyOptions {
    pub grid: GridSpec,
    /// Also compute the backward constant for p > 1.
    pub necessity: bool,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            necessity: true,
        }
    }
}

/// Ratio checks against the sufficiency bound (`2 K_{1,Φ}` for p = 1,
/// `C₀(Φ) K_{p,Φ}` for p > 1 with certified hypotheses). Violations are
/// listed, not raised; see [`certify_instance`].
pub fn certification_report(
    inst: &PoincareInstance,
    family: &[TestFunction],
    opts: &CertifyOptions,
) -> Result<CertificationReport> {
    let triple = inst.triple();
    let mut diagnostics = Vec::new();
    let (mut bound, mut bound_kind, mut c0) = (f64::INFINITY, None, None);
    let (mut sufficiency, mut necessity, mut hypotheses_passed) = (None, None, None);
    if inst.p == 1.0 {
        let k = k1_phi(&triple, &inst.phi, &opts.grid)?;
        bound = 2.0 * k.value;
        bound_kind = Some("2 K_1".to_string());
        sufficiency = Some(k);
    } else {
        let h = certify_forward_hypotheses(&inst.phi, inst.p, &CertificateGrid::default());
        hypotheses_passed = Some(h.passed);
        if h.passed {
            let k = k_p_phi_forward(&triple, inst.p, &inst.phi, &opts.grid)?;
            let c = c0_of_phi(&inst.phi)?;
            bound = c * k.value;
            bound_kind = Some("C0 K_p forward".to_string());
            c0 = Some(c);
            sufficiency = Some(k);
        } else {
            diagnostics.push("forward hypotheses not certified; no sufficiency bound is checked".into());
        }
        if opts.necessity {
            necessity = Some(k_p_phi_backward(&triple, inst.p, &inst.phi, &opts.grid)?);
        }
    }
    if let Some(k) = &sufficiency {
        if k.classification != Classification::FiniteStable {
            diagnostics.push(format!("sufficiency constant classified {}", k.classification));
        }
    }
    let records: Vec<RatioRecord> = family
        .par_iter()
        .map(|tf| test_function_ratio(inst, tf))
        .collect::<Result<_>>()?;
    let checks: Vec<BoundCheck> = records
        .iter()
        .map(|r| {
            let tolerance = r.tolerance();
            BoundCheck {
                id: r.id.clone(),
                ratio: r.ratio,
                bound,
                tolerance,
                passed: r.ratio <= bound + tolerance,
            }
        })
        .collect();
    let empirical_c = records.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let max_lower_bound = records.iter().filter_map(|r| r.lower_bound).reduce(f64::max);
    let lower_bound_consistent = match max_lower_bound {
        Some(lb) => records
            .iter()
            .filter(|r| r.lower_bound.is_some())
            .all(|r| r.lower_bound.unwrap() <= r.ratio + r.tolerance()) && lb <= empirical_c + MIN_TOLERANCE,
        None => true,
    };
    let violations: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.id.clone()).collect();
    let passed = violations.is_empty() && lower_bound_consistent;
    Ok(CertificationReport {
        p: inst.p,
        phi: inst.phi.label(),
        bound_kind,
        bound,
        c0,
        sufficiency_constant: sufficiency,
        necessity_constant: necessity,
        hypotheses_passed,
        records,
        checks,
        empirical_c,
        max_lower_bound,
        lower_bound_consistent,
        violations,
        passed,
        diagnostics,
    })
}

/// As [`certification_report`], failing with the worst [`Error::BoundViolation`].
pub fn certify_instance(
    inst: &PoincareInstance,
    family: &[TestFunction],
    opts: &CertifyOptions,
) -> Result<CertificationReport> {
    let report = certification_report(inst, family, opts)?;
    let worst = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .max_by(|x, y| (x.ratio - x.bound).total_cmp(&(y.ratio - y.bound)));
    if let Some(c) = worst {
        return Err(Error::BoundViolation {
            id: c.id.clone(),
            ratio: c.ratio,
            bound: c.bound,
            tol: c.tolerance,
        });
    }
    if !report.lower_bound_consistent {
        let r = report
            .records
            .iter()
            .find(|r| r.lower_bound.is_some_and(|lb| lb > r.ratio + r.tolerance()))
            .expect("an inconsistent record exists");
        return Err(Error::BoundViolation {
            id: r.id.clone(),
            ratio: r.ratio,
            bound: r.lower_bound.unwrap(),
            tol: r.tolerance(),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::RealFunction;

    fn lebesgue_instance(p: f64, phi: YoungFunction) -> PoincareInstance {
        let m = MeasureSpec::lebesgue(0.0, 1.0);
        PoincareInstance::new(m.clone(), m.clone(), m, p, phi).unwrap()
    }

    #[test]
    fn constant_function_ratio_zero() {
        let inst = lebesgue_instance(1.0, YoungFunction::power(1.0));
        let r = poincare_ratio(&inst, &PiecewiseLinearFunction::constant(0.0, 1.0, 5.0)).unwrap();
        assert_eq!((r.lhs, r.rhs, r.ratio), (0.0, 0.0, 0.0));
    }

    #[test]
    fn identity_function_ratio() {
        let inst = lebesgue_instance(1.0, YoungFunction::power(1.0));
        let r = poincare_ratio(&inst, &PiecewiseLinearFunction::affine(0.0, 1.0, 0.0, 1.0)).unwrap();
        assert!((r.lhs - 0.25).abs() < 1e-12);
        assert!((r.rhs - 1.0).abs() < 1e-15);
    }

    #[test]
    fn f_eps_rhs_and_limit() {
        let inst = lebesgue_instance(1.0, YoungFunction::power(1.0));
        let f = extremal_p1(&inst, 0.5, 1e-3, 1e6).unwrap();
        let r = test_function_ratio(&inst, &f).unwrap();
        // with w = 1, ∫|f'| w = (ν[a,b]/ν[a,α]) · w/w_n
        assert!((r.rhs - 2.0 / (1.0 + 1e-6)).abs() < 1e-9, "{}", r.rhs);
        let lim = extremal_p1_limit(&inst, 0.5, 1e6).unwrap();
        assert!((r.ratio - lim.ratio).abs() < 0.01 * lim.ratio);
    }

    #[test]
    fn f1_closed_form_lebesgue() {
        let inst = lebesgue_instance(2.0, YoungFunction::power(2.0));
        let (f1, f2) = extremal_p(&inst, 0.5, 1e12).unwrap();
        for x in [0.1, 0.3, 0.5, 0.8] {
            let expect = 0.5 * f64::min(x, 0.5).powi(2);
            // interpolation error is at most h²/8 with h = 0.5/4096
            assert!((f1.shape.eval(x) - expect).abs() < 2e-9, "x={x} {}", f1.shape.eval(x));
        }
        assert_eq!(f2.shape.eval(0.25), 0.0);
        let r1 = test_function_ratio(&inst, &f1).unwrap();
        assert!(r1.ratio >= f1.lower_bound.unwrap() - 1e-9);
    }

    #[test]
    fn bad_alpha_rejected() {
        let m = MeasureSpec::lebesgue(0.0, 1.0);
        let nu = MeasureSpec::atoms_only(0.0, 1.0, vec![(0.9, 1.0)]).unwrap();
        let inst = PoincareInstance::new(m.clone(), nu, m, 1.0, YoungFunction::power(1.0)).unwrap();
        assert!(matches!(extremal_p1(&inst, 0.5, 1e-3, 1e9), Err(Error::BadAlpha { .. })));
        assert!(matches!(extremal_p1(&inst, 0.9, 1e-3, 1e9), Err(Error::BadAlpha { .. })));
    }

    #[test]
    fn family_is_deterministic() {
        let f1 = random_family(7, 20, 5, 0.0, 1.0).unwrap();
        let f2 = random_family(7, 20, 5, 0.0, 1.0).unwrap();
        assert_eq!(f1, f2);
        let affine = random_family(3, 10, 1, 0.0, 1.0).unwrap();
        assert!(affine.iter().all(|(_, f)| f.knots().len() == 2));
    }
}
