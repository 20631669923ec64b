//! The infinitely degenerate weight `w(x) = 2e^{-1/x²}/x³` on `[0, b]` with
//! `μ = ν = w`: the (p,p) inequality holds, every (q,p) with `q > p` fails,
//! and the log-bump (Φ,p) inequality holds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{k_p_phi_forward, k_pq_classical, Classification, ConstantReport, Triple};
use crate::error::{invalid, Result};
use crate::grid::{GridPolicy, GridSpec};
use crate::measure::MeasureSpec;
use crate::quadrature::{integrate_pieces, QuadratureConfig};
use crate::young::{log_grid, ConjugateExponent, YoungFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExampleConfig {
    pub b: f64,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    /// Must lie in `(1/q, 1/p)`; `None` means the midpoint.
    pub epsilon: Option<f64>,
}

impl Default for ExampleConfig {
    fn default() -> Self {
        Self {
            b: 1.0,
            p: 2.0,
            q: 2.5,
            alpha: 1.0,
            epsilon: None,
        }
    }
}

impl ExampleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.b.is_finite()) {
            return invalid(format!("b must be positive and finite, got {}", self.b));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return invalid(format!("p must exceed 1, got {}", self.p));
        }
        if !(self.q > self.p && self.q.is_finite()) {
            return invalid(format!("q must exceed p = {}, got {}", self.p, self.q));
        }
        let top = 0.75 * self.p;
        if !(self.alpha > 0.0 && self.alpha < top) {
            return invalid(format!("alpha must lie in (0, {top}), got {}", self.alpha));
        }
        if let Some(e) = self.epsilon {
            if !(e > 1.0 / self.q && e < 1.0 / self.p) {
                return invalid(format!("epsilon must lie in (1/q, 1/p) = ({}, {}), got {e}", 1.0 / self.q, 1.0 / self.p));
            }
        }
        Ok(())
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(0.5 * (1.0 / self.q + 1.0 / self.p))
    }

    /// Same config with ε filled in.
    pub fn resolved(&self) -> Self {
        Self {
            epsilon: Some(self.epsilon()),
            ..*self
        }
    }

    fn p_prime(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// `δ(x) = x^{4α/(3p)}`
    pub fn delta(&self, x: f64) -> f64 {
        x.powf(4.0 * self.alpha / (3.0 * self.p))
    }
}

/// `w(x) = 2e^{-1/x²}/x³` on `[0, b]`, with `∫_0^x w = e^{-1/x²}`.
pub fn example_weight(b: f64) -> Result<MeasureSpec> {
    MeasureSpec::exp_degenerate(b)
}

/// 64 uniform points plus 512 geometric points per endpoint reaching
/// `b · 10⁻³`; the doubled level has 1024 geometric points.
pub fn example_grid() -> GridSpec {
    GridSpec {
        policy: GridPolicy::Union,
        uniform_points: 64,
        geometric_points: 512,
        decades: 3.0,
        refine_points: 16,
    }
}

/// The `g(t₀)` lower bound against the raw second (q,p) supremand at one `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlayPoint {
    pub x: f64,
    pub t0: f64,
    /// `ln g(t₀) = ln(e^{-1/b²} - e^{-εp/x²}) + (ε - 1/q)/x²`
    pub ln_g: f64,
    /// `ln[2^{1-p'} g(t₀) (∫_x^{t₀} t^{3(p'-1)} dt)^{1/p'}]`
    pub ln_lower_bound: f64,
    pub ln_supremand: f64,
    pub holds: bool,
}

/// Lower bound at `x`, or `None` when `t₀ ≥ b`.
pub fn g_overlay_bound(cfg: &ExampleConfig, x: f64) -> Option<(f64, f64, f64)> {
    let (p, q, b, eps) = (cfg.p, cfg.q, cfg.b, cfg.epsilon());
    let pp = cfg.p_prime();
    let t0 = x / (eps * p).sqrt();
    if !(t0 < b) {
        return None;
    }
    // ln(e^{-1/b²} - e^{-εp/x²}) = -1/b² + ln(1 - e^{1/b² - εp/x²})
    let ln_g = -1.0 / (b * b) + (-(1.0 / (b * b) - eps * p / (x * x)).exp()).ln_1p() + (eps - 1.0 / q) / (x * x);
    let k = 3.0 * pp - 2.0;
    // ∫_x^{t₀} t^{3(p'-1)} dt = (t₀^k - x^k)/k
    let ln_int = k * t0.ln() + (-(k * (x / t0).ln()).exp()).ln_1p() - k.ln();
    Some((t0, ln_g, (1.0 - pp) * 2f64.ln() + ln_g + ln_int / pp))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleReport {
    pub config: ExampleConfig,
    pub grid: GridSpec,
    /// K_{p,p}(w, w, w)
    pub classical_pp: ConstantReport,
    /// K_{p,q}(w, w, w)
    pub classical_pq: ConstantReport,
    /// K_{p,Φ}(w, w, w) with the log-bump Φ
    pub logbump_forward: ConstantReport,
    pub overlay: Vec<OverlayPoint>,
    pub overlay_holds: bool,
    /// Finite-stable, diverging, finite-stable.
    pub pattern_matches: bool,
    pub diagnostics: Vec<String>,
}

/// Run the three constants on the degenerate weight and overlay the `g(t₀)`
/// lower bound on the diverging supremand.
pub fn run_example(cfg: &ExampleConfig) -> Result<ExampleReport> {
    run_example_on(cfg, &example_grid())
}

pub fn run_example_on(cfg: &ExampleConfig, grid: &GridSpec) -> Result<ExampleReport> {
    cfg.validate()?;
    let cfg = cfg.resolved();
    let w = example_weight(cfg.b)?;
    let triple = Triple::uniform(w)?;
    let phi = YoungFunction::logbump(cfg.p, cfg.alpha);
    let classical_pp = k_pq_classical(&triple, cfg.p, cfg.p, grid)?;
    let classical_pq = k_pq_classical(&triple, cfg.p, cfg.q, grid)?;
    let logbump_forward = k_p_phi_forward(&triple, cfg.p, &phi, grid)?;

    let ln_norm = classical_pq.normalization.ln();
    let overlay: Vec<OverlayPoint> = classical_pq.terms[1]
        .trace
        .iter()
        .filter_map(|tp| {
            let (t0, ln_g, lb) = g_overlay_bound(&cfg, tp.x)?;
            let ln_supremand = tp.ln_value + ln_norm;
            Some(OverlayPoint {
                x: tp.x,
                t0,
                ln_g,
                ln_lower_bound: lb,
                ln_supremand,
                holds: ln_supremand >= lb - 1e-9 * lb.abs().max(1.0),
            })
        })
        .collect();
    let overlay_holds = overlay.iter().all(|o| o.holds);
    let pattern_matches = classical_pp.classification == Classification::FiniteStable
        && classical_pq.classification == Classification::Diverging
        && logbump_forward.classification == Classification::FiniteStable;
    let mut diagnostics = Vec::new();
    if !pattern_matches {
        diagnostics.push(format!(
            "classifications ({}, {}, {}) differ from the expected (finite-stable, diverging, finite-stable)",
            classical_pp.classification, classical_pq.classification, logbump_forward.classification
        ));
    }
    if !overlay_holds {
        let n = overlay.iter().filter(|o| !o.holds).count();
        diagnostics.push(format!("g(t0) lower bound exceeded the supremand at {n} points"));
    }
    Ok(ExampleReport {
        config: cfg,
        grid: *grid,
        classical_pp,
        classical_pq,
        logbump_forward,
        overlay,
        overlay_holds,
        pattern_matches,
        diagnostics,
    })
}

/// The split of the log-bump tail integral at `δ(x)`, all integrals taken in
/// `v = 1/x² - 1/t²` (a shift of `u = -1/t²`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCheck {
    pub x: f64,
    pub delta: f64,
    pub delta_over_x: f64,
    /// `∫_x^b (e^{(1/t²-1/x²)/p} - e^{1/b² - 1/(p't²) - 1/(px²)})^{p'} x^{-4α(p'-1)} t^{3(p'-1)} dt`
    pub tail: f64,
    /// `x^{-4α(p'-1)} ∫_x^δ e^{-(p'-1)(1/x²-1/t²)} t^{3p'} d(-1/t²)`
    pub i: f64,
    /// `(1 - e^{-(p'-1)(1/x² - 1/δ²)})/(p'-1)`
    pub i_bound: f64,
    /// Same integrand as `i` over `[δ, b]`.
    pub ii: f64,
    /// `x^{-4α(p'-1)} e^{-(p'-1)(1/x²-1/δ²)} · 2(b^{3p'-2} - δ^{3p'-2})/(3p'-2)`
    pub ii_bound: f64,
    pub quadrature_error: f64,
    pub i_within_bound: bool,
    pub ii_within_bound: bool,
    pub tail_below_split: bool,
}

fn v_breaks(total: f64, scale: f64) -> Vec<f64> {
    let mut pts = vec![0.0];
    let mut v = 1.0 / scale;
    while v < total {
        pts.push(v);
        v *= 2.0;
    }
    pts.push(total);
    pts
}

pub fn split_integral_check(cfg: &ExampleConfig, x: f64) -> Result<SplitCheck> {
    cfg.validate()?;
    let (p, b, alpha) = (cfg.p, cfg.b, cfg.alpha);
    let pp = ConjugateExponent::new(p)?.p_prime;
    let delta = cfg.delta(x);
    if !(x > 0.0 && x < delta && delta < b) {
        return invalid(format!("split needs 0 < x < delta(x) < b (x={x}, delta={delta})"));
    }
    let q = QuadratureConfig {
        abs_tol: 0.0,
        rel_tol: 1e-11,
        ..QuadratureConfig::default()
    };
    let ix2 = 1.0 / (x * x);
    let t_of = |v: f64| (ix2 - v).sqrt().recip();
    let prefactor = x.powf(-4.0 * alpha * (pp - 1.0));
    let v_delta = ix2 - 1.0 / (delta * delta);
    let v_b = ix2 - 1.0 / (b * b);
    let rate = pp - 1.0;

    let j = |v: f64| (-rate * v).exp() * t_of(v).powf(3.0 * pp);
    let mut bd = v_breaks(v_b, rate);
    bd.retain(|&v| v != v_delta);
    bd.push(v_delta);
    bd.sort_by(f64::total_cmp);
    let split = bd.iter().position(|&v| v == v_delta).unwrap();
    let i_est = integrate_pieces(j, &bd[..=split], &q)?;
    let ii_est = integrate_pieces(j, &bd[split..], &q)?;

    // dt = t³/2 dv
    let tail_integrand = |v: f64| {
        let t = t_of(v);
        let diff = (-v / p).exp() - (1.0 / (b * b) - ix2 + v / pp).exp();
        0.5 * diff.max(0.0).powf(pp) * t.powf(3.0 * pp)
    };
    let tail_est = integrate_pieces(tail_integrand, &v_breaks(v_b, 1.0 / p), &q)?;

    let i = prefactor * i_est.value;
    let ii = prefactor * ii_est.value;
    let tail = prefactor * tail_est.value;
    let quadrature_error = prefactor * (i_est.error + ii_est.error + tail_est.error);
    let i_bound = -(-rate * v_delta).exp_m1() / rate;
    let k = 3.0 * pp - 2.0;
    let ii_bound = prefactor * (-rate * v_delta).exp() * 2.0 * (b.powf(k) - delta.powf(k)) / k;
    let slack = |v: f64| 1e-9 * v.abs() + 3.0 * quadrature_error;
    Ok(SplitCheck {
        x,
        delta,
        delta_over_x: delta / x,
        tail,
        i,
        i_bound,
        ii,
        ii_bound,
        quadrature_error,
        i_within_bound: i <= i_bound + slack(i_bound),
        ii_within_bound: ii <= ii_bound + slack(ii_bound),
        tail_below_split: tail <= i + ii + slack(i + ii),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSweep {
    pub points: Vec<SplitCheck>,
    /// `II` strictly decreasing as `x` decreases.
    pub ii_decreasing: bool,
    pub all_hold: bool,
}

/// `split_integral_check` on `count` log-spaced points from `x_hi` down to `x_lo`.
pub fn split_sweep(cfg: &ExampleConfig, x_hi: f64, x_lo: f64, count: usize) -> Result<SplitSweep> {
    let mut xs = log_grid(x_lo, x_hi, count);
    xs.reverse();
    let points = xs
        .par_iter()
        .map(|&x| split_integral_check(cfg, x))
        .collect::<Result<Vec<_>>>()?;
    let ii_decreasing = points.windows(2).all(|w| w[1].ii < w[0].ii || w[1].ii == 0.0);
    let all_hold = ii_decreasing
        && points
            .iter()
            .all(|s| s.i_within_bound && s.ii_within_bound && s.tail_below_split && s.delta_over_x > 1.0);
    Ok(SplitSweep {
        points,
        ii_decreasing,
        all_hold,
    })
}
