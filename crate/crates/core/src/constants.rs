//! Characterizing constants: K_{1,Φ}, the forward and backward K_{p,Φ},
//! the classical K_{p,q}, C₀(Φ) and the Hardy-type S/T constants.
//!
//! Every supremum is scanned on a [`GridSpec`] grid, refined around the
//! argmax, then repeated on the doubled grid; the two results decide the
//! classification. All supremands are carried as logarithms.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::function::StepFunction;
use crate::gauge::{gauge_norm, GaugeConfig};
use crate::grid::{merge_points, refinement, GridSpec, ScanGrid};
use crate::measure::MeasureSpec;
use crate::quadrature::{ln_add_exp, ln_integrate, ln_integrate_to_endpoint, QuadratureConfig};
use crate::young::{
    certify_convex, certify_submultiplicative, CertificateGrid, ConjugateExponent, ConvexityReport,
    SubmultiplicativityReport, Young, YoungFunction, YoungSpec,
};

/// Trace growth (toward an endpoint) above which a supremum is called diverging.
pub const DIVERGENCE_FACTOR: f64 = 1e6;
/// Number of trailing geometric points that must increase monotonically.
pub const DIVERGENCE_RUN: usize = 8;
/// Relative change under grid doubling accepted as stable.
pub const STABILITY_TOL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    FiniteStable,
    Diverging,
    Inconclusive,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::FiniteStable => "finite-stable",
            Classification::Diverging => "diverging",
            Classification::Inconclusive => "inconclusive",
        })
    }
}

/// The weights `μ`, `ν`, `w` on a common interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub mu: MeasureSpec,
    pub nu: MeasureSpec,
    pub w: MeasureSpec,
}

impl Triple {
    pub fn new(mu: MeasureSpec, nu: MeasureSpec, w: MeasureSpec) -> Result<Self> {
        if mu.a() != nu.a() || mu.a() != w.a() || mu.b() != nu.b() || mu.b() != w.b() {
            return invalid("mu, nu and w must live on the same interval");
        }
        if !(nu.total_mass() > 0.0) {
            return Err(Error::ZeroTotalMass);
        }
        if !w.atoms().is_empty() {
            return invalid("the weight w must be a density (no atoms)");
        }
        Ok(Self { mu, nu, w })
    }

    /// `μ = ν = w = m`.
    pub fn uniform(m: MeasureSpec) -> Result<Self> {
        Self::new(m.clone(), m.clone(), m)
    }

    pub fn a(&self) -> f64 {
        self.mu.a()
    }

    pub fn b(&self) -> f64 {
        self.mu.b()
    }
}

/// The weight `τ` in the Hardy-type constants.
#[derive(Clone)]
pub enum Tau {
    Unit,
    /// `τ(t) = ν[a, t]`
    NuLeft(MeasureSpec),
    /// `τ(t) = ν[t, b]`
    NuRight(MeasureSpec),
    /// `ln τ(t)` from a closure, with its breakpoints.
    Custom {
        label: String,
        ln_tau: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        breakpoints: Vec<f64>,
    },
}

impl std::fmt::Debug for Tau {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

impl Tau {
    pub fn label(&self) -> String {
        match self {
            Tau::Unit => "1".into(),
            Tau::NuLeft(_) => "nu[a,t]".into(),
            Tau::NuRight(_) => "nu[t,b]".into(),
            Tau::Custom { label, .. } => label.clone(),
        }
    }

    fn ln_value(&self, t: f64) -> f64 {
        match self {
            Tau::Unit => 0.0,
            Tau::NuLeft(nu) => nu.ln_mass_left(t),
            Tau::NuRight(nu) => nu.ln_mass_right(t),
            Tau::Custom { ln_tau, .. } => ln_tau(t),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Tau::Unit => Vec::new(),
            Tau::NuLeft(nu) | Tau::NuRight(nu) => nu.breakpoints(),
            Tau::Custom { breakpoints, .. } => breakpoints.clone(),
        }
    }
}

/// How the `μ`-tail enters a Hardy term.
#[derive(Debug, Clone, Copy)]
enum Factor<'a> {
    /// `[Φ^{-1}(m^{-1/2})]^{-2}`
    Orlicz2(&'a YoungFunction),
    /// `[Φ^{-1}(1/m)]^{-1}`
    Orlicz1(&'a YoungFunction),
    /// `m^{1/q}`
    Power(f64),
}

impl Factor<'_> {
    fn ln_value(&self, ln_m: f64) -> Result<f64> {
        if ln_m == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(match self {
            Factor::Orlicz2(phi) => -2.0 * phi.ln_inverse(-0.5 * ln_m)?,
            Factor::Orlicz1(phi) => -phi.ln_inverse(-ln_m)?,
            Factor::Power(q) => ln_m / q,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    /// `∫_a^x`, tail `μ[x, b]`
    Left,
    /// `∫_x^b`, tail `μ[a, x]`
    Right,
}

/// Something whose supremum over `(a, b)` is scanned.
trait Supremand: Sync {
    fn label(&self) -> String;
    /// Points that should always be scan candidates.
    fn breakpoints(&self) -> Vec<f64>;
    /// `ln` of the supremand at each (sorted) `x`; NaN marks a skipped point.
    fn ln_values(&self, xs: &[f64]) -> Result<Vec<f64>>;
}

struct HardyTerm<'a> {
    label: String,
    side: Side,
    factor: Factor<'a>,
    mu: &'a MeasureSpec,
    w: &'a MeasureSpec,
    tau: &'a Tau,
    p_prime: f64,
    quadrature: QuadratureConfig,
}

impl HardyTerm<'_> {
    /// `ln(τ^{p'} w^{1-p'})`, with `0 · ∞ = 0`.
    fn ln_integrand(&self, t: f64) -> f64 {
        let lt = self.tau.ln_value(t);
        if lt == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        self.p_prime * lt + (1.0 - self.p_prime) * self.w.ln_density_at(t)
    }
}

impl Supremand for HardyTerm<'_> {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut pts = self.mu.breakpoints();
        pts.extend(self.w.breakpoints());
        pts.extend(self.tau.breakpoints());
        pts
    }

    fn ln_values(&self, xs: &[f64]) -> Result<Vec<f64>> {
        let (a, b) = (self.mu.a(), self.mu.b());
        let n = xs.len();
        if n == 0 {
            return Ok(Vec::new());
        }
        let h = |t: f64| self.ln_integrand(t);
        let q = &self.quadrature;
        // cell i is [xs[i-1], xs[i]] with xs[-1] = a and xs[n] = b
        let cells: Vec<f64> = (0..=n)
            .into_par_iter()
            .map(|i| {
                let est = if i == 0 && self.side == Side::Left {
                    ln_integrate_to_endpoint(h, xs[0], a, q)?
                } else if i == n && self.side == Side::Right {
                    ln_integrate_to_endpoint(h, xs[n - 1], b, q)?
                } else if i == 0 || i == n {
                    return Ok(f64::NEG_INFINITY);
                } else {
                    ln_integrate(h, xs[i - 1], xs[i], q)?
                };
                Ok(est.ln_value)
            })
            .collect::<Result<_>>()?;
        let mut ln_inner = vec![f64::NEG_INFINITY; n];
        match self.side {
            Side::Left => {
                let mut acc = f64::NEG_INFINITY;
                for i in 0..n {
                    acc = ln_add_exp(acc, cells[i]);
                    ln_inner[i] = acc;
                }
            }
            Side::Right => {
                let mut acc = f64::NEG_INFINITY;
                for i in (0..n).rev() {
                    acc = ln_add_exp(acc, cells[i + 1]);
                    ln_inner[i] = acc;
                }
            }
        }
        xs.par_iter()
            .zip(ln_inner.par_iter())
            .map(|(&x, &li)| {
                let ln_m = match self.side {
                    Side::Left => self.mu.ln_mass_right(x),
                    Side::Right => self.mu.ln_mass_left(x),
                };
                let lf = self.factor.ln_value(ln_m)?;
                if lf == f64::NEG_INFINITY || li == f64::NEG_INFINITY {
                    return Ok(f64::NEG_INFINITY);
                }
                Ok(lf + li / self.p_prime)
            })
            .collect()
    }
}

struct K1Term<'a> {
    triple: &'a Triple,
    phi: &'a dyn Young,
    gauge: GaugeConfig,
}

impl K1Term<'_> {
    fn ln_at(&self, x: f64) -> Result<f64> {
        let t = self.triple;
        let ln_w = t.w.ln_density_at(x);
        if ln_w == f64::NEG_INFINITY || ln_w.is_nan() {
            return Ok(f64::NAN);
        }
        let (ln_l, ln_r) = (t.nu.ln_mass_left(x), t.nu.ln_mass_right(x));
        let ln_s = ln_l.max(ln_r);
        if ln_s == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        // ν[a,x] χ_{[x,b]} - ν[x,b] χ_{[a,x]}, scaled by 1/max(ν[a,x], ν[x,b])
        let (l, r) = ((ln_l - ln_s).exp(), (ln_r - ln_s).exp());
        let step = StepFunction::two_level(t.a(), x, t.b(), -r, l, l - r)?;
        let norm = gauge_norm(&step, self.phi, &t.mu, &self.gauge)?.norm;
        Ok(ln_s + norm.ln() - ln_w)
    }
}

impl Supremand for K1Term<'_> {
    fn label(&self) -> String {
        "sup (1/w(x)) |nu[a,x] chi[x,b] - nu[x,b] chi[a,x]|_phi".into()
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut pts = self.triple.mu.breakpoints();
        pts.extend(self.triple.nu.breakpoints());
        pts.extend(self.triple.w.breakpoints());
        pts
    }

    fn ln_values(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.par_iter().map(|&x| self.ln_at(x)).collect()
    }
}

/// One sampled point of a supremand (already divided by the normalization).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub x: f64,
    #[serde(with = "crate::ext")]
    pub value: f64,
    #[serde(with = "crate::ext")]
    pub ln_value: f64,
}

/// Evidence for monotone growth toward an endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceEvidence {
    pub endpoint: f64,
    /// `ln` supremand along the geometric subgrid, ordered toward the endpoint.
    #[serde(with = "crate::ext::vec")]
    pub ln_values: Vec<f64>,
    pub monotone_tail: bool,
    /// `ln(last / median)` along the subgrid.
    #[serde(with = "crate::ext")]
    pub ln_growth: f64,
    pub diverging: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermReport {
    pub label: String,
    #[serde(with = "crate::ext")]
    pub sup: f64,
    #[serde(with = "crate::ext")]
    pub ln_sup: f64,
    pub argmax: Option<f64>,
    /// Supremum on the coarse grid.
    #[serde(with = "crate::ext")]
    pub coarse_sup: f64,
    #[serde(with = "crate::ext")]
    pub relative_change: f64,
    pub classification: Classification,
    pub divergence: Vec<DivergenceEvidence>,
    pub skipped_points: usize,
    pub trace: Vec<TracePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub spec: GridSpec,
    pub coarse_points: usize,
    pub fine_points: usize,
    /// Coarse grid, coarse refinement, doubled grid, doubled refinement.
    pub passes: usize,
}

/// Sampled hypothesis certificates required by the forward constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub invertible: bool,
    pub submultiplicative: SubmultiplicativityReport,
    pub lambda_convexity: Option<ConvexityReport>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantReport {
    pub constant: String,
    /// `+inf` when diverging.
    #[serde(with = "crate::ext")]
    pub value: f64,
    #[serde(with = "crate::ext")]
    pub ln_value: f64,
    /// Largest value actually observed on the grid (finite even when diverging).
    #[serde(with = "crate::ext")]
    pub observed_max: f64,
    #[serde(with = "crate::ext")]
    pub ln_observed_max: f64,
    pub classification: Classification,
    /// Every trace value is the raw supremand divided by this.
    pub normalization: f64,
    pub terms: Vec<TermReport>,
    pub grid: GridMeta,
    pub hypotheses: Option<HypothesisReport>,
    pub diagnostics: Vec<String>,
}

fn ln_max(vals: &[f64]) -> (f64, Option<usize>) {
    let mut best = f64::NEG_INFINITY;
    let mut idx = None;
    for (i, &v) in vals.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        if idx.is_none() || v > best {
            best = v;
            idx = Some(i);
        }
    }
    (best, idx)
}

/// Refinement between the argmax neighbours; never beyond the outermost grid
/// points, so the scan depth toward an endpoint stays as configured.
fn refine_around(xs: &[f64], idx: Option<usize>, count: usize) -> Vec<f64> {
    let Some(i) = idx else { return Vec::new() };
    let lo = xs[i.saturating_sub(1)];
    let hi = xs[(i + 1).min(xs.len() - 1)];
    refinement(lo, hi, count)
}

fn divergence_evidence(endpoint: f64, sub: &[f64], xs: &[f64], ln_vals: &[f64]) -> Option<DivergenceEvidence> {
    let seq: Vec<f64> = sub
        .iter()
        .filter_map(|x| xs.binary_search_by(|y| y.total_cmp(x)).ok())
        .map(|i| ln_vals[i])
        .filter(|v| !v.is_nan())
        .collect();
    if seq.len() < DIVERGENCE_RUN + 1 {
        return None;
    }
    let tail = &seq[seq.len() - DIVERGENCE_RUN..];
    let monotone_tail = tail.windows(2).all(|w| w[1] > w[0]);
    let mut sorted = seq.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let last = *seq.last().unwrap();
    let ln_growth = if last == f64::NEG_INFINITY { f64::NEG_INFINITY } else { last - median };
    let diverging = monotone_tail && ln_growth > DIVERGENCE_FACTOR.ln();
    Some(DivergenceEvidence {
        endpoint,
        ln_values: seq,
        monotone_tail,
        ln_growth,
        diverging,
    })
}

fn relative_change(coarse_ln: f64, fine_ln: f64) -> f64 {
    if fine_ln == f64::NEG_INFINITY && coarse_ln == f64::NEG_INFINITY {
        return 0.0;
    }
    if !fine_ln.is_finite() || !coarse_ln.is_finite() {
        return f64::INFINITY;
    }
    let hi = fine_ln.max(coarse_ln);
    ((fine_ln - hi).exp() - (coarse_ln - hi).exp()).abs() / 1f64.max((fine_ln - hi).exp())
}

struct TermOutcome {
    report: TermReport,
    ln_sup: f64,
    coarse_ln_sup: f64,
}

fn scan_term(term: &dyn Supremand, spec: &GridSpec, a: f64, b: f64, ln_norm: f64) -> Result<(TermOutcome, usize, usize)> {
    let bps = term.breakpoints();
    let coarse: ScanGrid = spec.build(a, b, 0);
    let xs0 = merge_points(a, b, &[&coarse.points, &bps]);
    let v0 = term.ln_values(&xs0)?;
    let r0 = refine_around(&xs0, ln_max(&v0).1, spec.refine_points);
    let xs0r = merge_points(a, b, &[&xs0, &r0]);
    let v0r = if r0.is_empty() { v0 } else { term.ln_values(&xs0r)? };
    let (coarse_ln, _) = ln_max(&v0r);

    let fine = spec.build(a, b, 1);
    let xs1 = merge_points(a, b, &[&fine.points, &bps, &r0]);
    let v1 = term.ln_values(&xs1)?;
    let r1 = refine_around(&xs1, ln_max(&v1).1, spec.refine_points);
    let xs1r = merge_points(a, b, &[&xs1, &r1]);
    let v1r = if r1.is_empty() { v1 } else { term.ln_values(&xs1r)? };
    let (fine_ln, arg) = ln_max(&v1r);

    let mut divergence = Vec::new();
    if let Some(ev) = divergence_evidence(a, &fine.toward_a, &xs1r, &v1r) {
        divergence.push(ev);
    }
    if let Some(ev) = divergence_evidence(b, &fine.toward_b, &xs1r, &v1r) {
        divergence.push(ev);
    }
    let rel = relative_change(coarse_ln, fine_ln);
    let classification = if fine_ln == f64::INFINITY || divergence.iter().any(|d| d.diverging) {
        Classification::Diverging
    } else if rel < STABILITY_TOL {
        Classification::FiniteStable
    } else {
        Classification::Inconclusive
    };
    let skipped_points = v1r.iter().filter(|v| v.is_nan()).count();
    let trace = xs1r
        .iter()
        .zip(&v1r)
        .filter(|(_, v)| !v.is_nan())
        .map(|(&x, &v)| {
            let ln_value = v - ln_norm;
            TracePoint {
                x,
                value: ln_value.exp(),
                ln_value,
            }
        })
        .collect();
    let report = TermReport {
        label: term.label(),
        sup: (fine_ln - ln_norm).exp(),
        ln_sup: fine_ln - ln_norm,
        argmax: arg.map(|i| xs1r[i]),
        coarse_sup: (coarse_ln - ln_norm).exp(),
        relative_change: rel,
        classification,
        divergence,
        skipped_points,
        trace,
    };
    Ok((
        TermOutcome {
            report,
            ln_sup: fine_ln,
            coarse_ln_sup: coarse_ln,
        },
        xs0r.len(),
        xs1r.len(),
    ))
}

fn assemble(
    constant: &str,
    terms: &[&dyn Supremand],
    spec: &GridSpec,
    a: f64,
    b: f64,
    normalization: f64,
    hypotheses: Option<HypothesisReport>,
) -> Result<ConstantReport> {
    spec.validate()?;
    let ln_norm = normalization.ln();
    let mut outcomes = Vec::new();
    let (mut coarse_points, mut fine_points) = (0, 0);
    for t in terms {
        let (o, c, f) = scan_term(*t, spec, a, b, ln_norm)?;
        coarse_points = coarse_points.max(c);
        fine_points = fine_points.max(f);
        outcomes.push(o);
    }
    let mut diagnostics = Vec::new();
    for o in &outcomes {
        if o.report.skipped_points > 0 {
            diagnostics.push(format!(
                "{}: {} grid points skipped (zero weight)",
                o.report.label, o.report.skipped_points
            ));
        }
    }
    let ln_total = outcomes.iter().fold(f64::NEG_INFINITY, |acc, o| ln_add_exp(acc, o.ln_sup)) - ln_norm;
    let ln_coarse = outcomes
        .iter()
        .fold(f64::NEG_INFINITY, |acc, o| ln_add_exp(acc, o.coarse_ln_sup))
        - ln_norm;
    let diverging = outcomes
        .iter()
        .any(|o| o.report.classification == Classification::Diverging);
    let classification = if diverging {
        Classification::Diverging
    } else if relative_change(ln_coarse, ln_total) < STABILITY_TOL {
        Classification::FiniteStable
    } else {
        Classification::Inconclusive
    };
    if diverging {
        diagnostics.push("supremum classified as diverging; value reported as +inf".into());
    }
    let observed_max = ln_total.exp();
    let (value, ln_value) = if diverging {
        (f64::INFINITY, f64::INFINITY)
    } else {
        (observed_max, ln_total)
    };
    Ok(ConstantReport {
        constant: constant.to_string(),
        value,
        ln_value,
        observed_max,
        ln_observed_max: ln_total,
        classification,
        normalization,
        terms: outcomes.into_iter().map(|o| o.report).collect(),
        grid: GridMeta {
            spec: *spec,
            coarse_points,
            fine_points,
            passes: 4,
        },
        hypotheses,
        diagnostics,
    })
}

/// `C₀(Φ) = 2 / Φ^{-1}(1/2)`.
pub fn c0_of_phi(phi: &YoungFunction) -> Result<f64> {
    Ok(2.0 / phi.invert(0.5)?)
}

/// K_{1,Φ}(μ, ν, w).
pub fn k1_phi(triple: &Triple, phi: &dyn Young, grid: &GridSpec) -> Result<ConstantReport> {
    let term = K1Term {
        triple,
        phi,
        gauge: GaugeConfig::default(),
    };
    assemble("k1_phi", &[&term], grid, triple.a(), triple.b(), triple.nu.total_mass(), None)
}

/// The K_{1,Φ} supremand at one `x`, divided by `ν[a,b]`. NaN where `w(x) = 0`.
pub fn k1_supremand(triple: &Triple, phi: &dyn Young, x: f64) -> Result<f64> {
    let term = K1Term {
        triple,
        phi,
        gauge: GaugeConfig::default(),
    };
    Ok((term.ln_at(x)? - triple.nu.total_mass().ln()).exp())
}

/// Certificates for the forward constant: invertibility, sampled
/// submultiplicativity of Φ and convexity of Λ(t) = Φ(t^{1/p}).
pub fn certify_forward_hypotheses(phi: &YoungFunction, p: f64, grid: &CertificateGrid) -> HypothesisReport {
    let invertible = phi.strictly_increasing_on_nonneg();
    let submultiplicative = certify_submultiplicative(phi, &grid.points());
    let lambda_convexity = YoungFunction::new(YoungSpec::Lambda {
        p,
        base: Box::new(phi.spec().clone()),
    })
    .ok()
    .map(|lambda| certify_convex(&lambda, &grid.points()));
    let passed = invertible && submultiplicative.passed && lambda_convexity.as_ref().is_some_and(|c| c.passed);
    HypothesisReport {
        invertible,
        submultiplicative,
        lambda_convexity,
        passed,
    }
}

fn hypothesis_error(h: &HypothesisReport) -> Error {
    if !h.invertible {
        return Error::HypothesisViolation("Phi is not invertible on [0, inf)".into());
    }
    if !h.submultiplicative.passed {
        let first = h.submultiplicative.violations.first();
        return Error::HypothesisViolation(format!(
            "Phi is not submultiplicative on the sampled grid ({} violations; first at {:?})",
            h.submultiplicative.violation_count,
            first.map(|v| (v.s, v.t))
        ));
    }
    let w = h.lambda_convexity.as_ref().and_then(|c| c.worst);
    Error::HypothesisViolation(format!("Lambda(t) = Phi(t^(1/p)) is not convex (witness {w:?})"))
}

#[allow(clippy::too_many_arguments)]
fn two_sided(
    constant: &str,
    triple: &Triple,
    p: f64,
    left: Factor<'_>,
    right: Factor<'_>,
    grid: &GridSpec,
    hypotheses: Option<HypothesisReport>,
) -> Result<ConstantReport> {
    let pp = ConjugateExponent::new(p)?.p_prime;
    let tau_l = Tau::NuLeft(triple.nu.clone());
    let tau_r = Tau::NuRight(triple.nu.clone());
    let q = QuadratureConfig::default();
    let s = HardyTerm {
        label: "sup over x of factor(mu[x,b]) (int_a^x nu[a,t]^p' w^(1-p'))^(1/p')".into(),
        side: Side::Left,
        factor: left,
        mu: &triple.mu,
        w: &triple.w,
        tau: &tau_l,
        p_prime: pp,
        quadrature: q,
    };
    let t = HardyTerm {
        label: "sup over x of factor(mu[a,x]) (int_x^b nu[t,b]^p' w^(1-p'))^(1/p')".into(),
        side: Side::Right,
        factor: right,
        mu: &triple.mu,
        w: &triple.w,
        tau: &tau_r,
        p_prime: pp,
        quadrature: q,
    };
    assemble(constant, &[&s, &t], grid, triple.a(), triple.b(), triple.nu.total_mass(), hypotheses)
}

/// K_{p,Φ}(μ, ν, w), the sufficiency constant with `[Φ^{-1}(μ^{-1/2})]^{-2}` factors.
pub fn k_p_phi_forward(triple: &Triple, p: f64, phi: &YoungFunction, grid: &GridSpec) -> Result<ConstantReport> {
    let h = certify_forward_hypotheses(phi, p, &CertificateGrid::default());
    if !h.passed {
        return Err(hypothesis_error(&h));
    }
    two_sided("k_p_phi_forward", triple, p, Factor::Orlicz2(phi), Factor::Orlicz2(phi), grid, Some(h))
}

/// K̃_{p,Φ}(μ, ν, w), the necessity constant with `[Φ^{-1}(1/μ)]^{-1}` factors.
pub fn k_p_phi_backward(triple: &Triple, p: f64, phi: &YoungFunction, grid: &GridSpec) -> Result<ConstantReport> {
    if !phi.strictly_increasing_on_nonneg() {
        return Err(Error::NotInvertible { label: phi.label() });
    }
    two_sided("k_p_phi_backward", triple, p, Factor::Orlicz1(phi), Factor::Orlicz1(phi), grid, None)
}

/// The classical two-sup constant K_{p,q}(μ, ν, w) with `μ^{1/q}` factors.
pub fn k_pq_classical(triple: &Triple, p: f64, q: f64, grid: &GridSpec) -> Result<ConstantReport> {
    if !(q >= p) {
        return invalid(format!("classical constant needs q >= p (p={p}, q={q})"));
    }
    two_sided("k_pq_classical", triple, p, Factor::Power(q), Factor::Power(q), grid, None)
}

fn hardy(
    constant: &str,
    side: Side,
    p: f64,
    phi: &YoungFunction,
    mu: &MeasureSpec,
    tau: &Tau,
    w: &MeasureSpec,
    grid: &GridSpec,
) -> Result<ConstantReport> {
    if mu.a() != w.a() || mu.b() != w.b() {
        return invalid("mu and w must live on the same interval");
    }
    if !phi.strictly_increasing_on_nonneg() {
        return Err(Error::NotInvertible { label: phi.label() });
    }
    let pp = ConjugateExponent::new(p)?.p_prime;
    let term = HardyTerm {
        label: match side {
            Side::Left => format!("S: factor(mu[x,b]) (int_a^x tau^p' w^(1-p'))^(1/p'), tau = {}", tau.label()),
            Side::Right => format!("T: factor(mu[a,x]) (int_x^b tau^p' w^(1-p'))^(1/p'), tau = {}", tau.label()),
        },
        side,
        factor: Factor::Orlicz2(phi),
        mu,
        w,
        tau,
        p_prime: pp,
        quadrature: QuadratureConfig::default(),
    };
    assemble(constant, &[&term], grid, mu.a(), mu.b(), 1.0, None)
}

/// S(p, Φ, μ, τ, w) = sup_x [Φ^{-1}(μ[x,b]^{-1/2})]^{-2} (∫_a^x τ^{p'} w^{1-p'})^{1/p'}.
pub fn hardy_s_constant(
    p: f64,
    phi: &YoungFunction,
    mu: &MeasureSpec,
    tau: &Tau,
    w: &MeasureSpec,
    grid: &GridSpec,
) -> Result<ConstantReport> {
    hardy("hardy_s", Side::Left, p, phi, mu, tau, w, grid)
}

/// T(p, Φ, μ, τ, w) = sup_x [Φ^{-1}(μ[a,x]^{-1/2})]^{-2} (∫_x^b τ^{p'} w^{1-p'})^{1/p'}.
pub fn hardy_t_constant(
    p: f64,
    phi: &YoungFunction,
    mu: &MeasureSpec,
    tau: &Tau,
    w: &MeasureSpec,
    grid: &GridSpec,
) -> Result<ConstantReport> {
    hardy("hardy_t", Side::Right, p, phi, mu, tau, w, grid)
}
