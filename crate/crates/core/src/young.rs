//! Young functions, their inverses, complementary functions, the
//! `Λ(t) = Φ(t^{1/p})` transform, and sampled hypothesis certificates.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Anything that behaves like an even, nonnegative, nondecreasing-in-|t|
/// function vanishing at zero. Used by the modular and the gauge norm.
pub trait Young: Sync {
    fn eval(&self, t: f64) -> f64;
    fn label(&self) -> String;
}

fn one() -> f64 {
    1.0
}

/// One branch of a user-defined piecewise Young function:
/// `coef · |t|^exponent · (ln |t|)^log_power` on `[from, next.from)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPiece {
    pub from: f64,
    pub coef: f64,
    pub exponent: f64,
    #[serde(default)]
    pub log_power: f64,
}

impl PowerPiece {
    fn eval(&self, t: f64) -> f64 {
        let mut v = self.coef * t.powf(self.exponent);
        if self.log_power != 0.0 {
            v *= t.ln().powf(self.log_power);
        }
        v
    }
}

/// Catalog description of a Young function. This is also the JSON schema
/// (`{"kind": "power", "q": 2.0}`, `{"kind": "logbump", "p": 2.0, "alpha": 1.0}`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum YoungSpec {
    /// `scale · |t|^q`
    Power {
        q: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `|t|^p (ln|t|)^α` for `|t| >= e^{2α}`, `|t|^p (2α)^α` below.
    Logbump { p: f64, alpha: f64 },
    /// `e^{|t|} - 1`
    Exponential,
    /// Linear on `[0, knee)` with slope `base(knee)/knee`, `base` beyond.
    LinearSpliced { knee: f64, base: Box<YoungSpec> },
    /// `base` on `[0, cap]`, `+inf` beyond (extended-valued).
    Capped { cap: f64, base: Box<YoungSpec> },
    /// `base(|t|^{1/p})`
    Lambda { p: f64, base: Box<YoungSpec> },
    Piecewise { pieces: Vec<PowerPiece> },
}

impl YoungSpec {
    fn validate(&self) -> Result<()> {
        match self {
            YoungSpec::Power { q, scale } => {
                if !(*q >= 1.0 && q.is_finite()) || !(*scale > 0.0 && scale.is_finite()) {
                    return invalid(format!("power Young function needs q >= 1 and scale > 0 (q={q}, scale={scale})"));
                }
            }
            YoungSpec::Logbump { p, alpha } => {
                if !(*p >= 1.0 && p.is_finite()) || !(*alpha > 0.0 && alpha.is_finite()) {
                    return invalid(format!("logbump needs p >= 1 and alpha > 0 (p={p}, alpha={alpha})"));
                }
            }
            YoungSpec::Exponential => {}
            YoungSpec::LinearSpliced { knee, base } => {
                if !(*knee > 0.0 && knee.is_finite()) {
                    return invalid("linear_spliced knee must be positive");
                }
                base.validate()?;
            }
            YoungSpec::Capped { cap, base } => {
                if !(*cap > 0.0) {
                    return invalid("capped Young function needs cap > 0");
                }
                base.validate()?;
            }
            YoungSpec::Lambda { p, base } => {
                if !(*p > 0.0 && p.is_finite()) {
                    return invalid("lambda transform needs p > 0");
                }
                base.validate()?;
            }
            YoungSpec::Piecewise { pieces } => {
                if pieces.is_empty() || pieces[0].from != 0.0 {
                    return invalid("piecewise Young function must start with a piece at from = 0");
                }
                if pieces.windows(2).any(|w| !(w[1].from > w[0].from)) {
                    return invalid("piecewise Young function pieces must have increasing `from`");
                }
                for pc in pieces {
                    if !(pc.coef >= 0.0) || !(pc.exponent > 0.0) {
                        return invalid("piecewise pieces need coef >= 0 and exponent > 0");
                    }
                    if pc.log_power != 0.0 && pc.from < 1.0 {
                        return invalid("pieces with a logarithmic factor must start at from >= 1");
                    }
                }
            }
        }
        Ok(())
    }

    fn label(&self) -> String {
        match self {
            YoungSpec::Power { q, scale } if *scale == 1.0 => format!("power(q={q})"),
            YoungSpec::Power { q, scale } => format!("power(q={q}, scale={scale})"),
            YoungSpec::Logbump { p, alpha } => format!("logbump(p={p}, alpha={alpha})"),
            YoungSpec::Exponential => "exp(|t|)-1".to_string(),
            YoungSpec::LinearSpliced { knee, base } => format!("linear_spliced(knee={knee}, {})", base.label()),
            YoungSpec::Capped { cap, base } => format!("capped(cap={cap}, {})", base.label()),
            YoungSpec::Lambda { p, base } => format!("lambda(p={p}, {})", base.label()),
            YoungSpec::Piecewise { pieces } => format!("piecewise({} pieces)", pieces.len()),
        }
    }

    fn finite_on_reals(&self) -> bool {
        match self {
            YoungSpec::Capped { .. } => false,
            YoungSpec::LinearSpliced { base, .. } | YoungSpec::Lambda { base, .. } => base.finite_on_reals(),
            _ => true,
        }
    }

    /// Φ(t) for t >= 0.
    fn eval_nonneg(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match self {
            YoungSpec::Power { q, scale } => scale * t.powf(*q),
            YoungSpec::Logbump { p, alpha } => {
                let knee = (2.0 * alpha).exp();
                if t >= knee {
                    t.powf(*p) * t.ln().powf(*alpha)
                } else {
                    t.powf(*p) * (2.0 * alpha).powf(*alpha)
                }
            }
            YoungSpec::Exponential => t.exp_m1(),
            YoungSpec::LinearSpliced { knee, base } => {
                if t < *knee {
                    base.eval_nonneg(*knee) * t / knee
                } else {
                    base.eval_nonneg(t)
                }
            }
            YoungSpec::Capped { cap, base } => {
                if t > *cap {
                    f64::INFINITY
                } else {
                    base.eval_nonneg(t)
                }
            }
            YoungSpec::Lambda { p, base } => base.eval_nonneg(t.powf(1.0 / p)),
            YoungSpec::Piecewise { pieces } => {
                let idx = pieces.partition_point(|pc| pc.from <= t) - 1;
                pieces[idx].eval(t)
            }
        }
    }

    /// `ln Φ(e^s)`, evaluated without forming `e^s` where possible.
    fn ln_eval_of_ln(&self, s: f64) -> f64 {
        if s == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        match self {
            YoungSpec::Power { q, scale } => scale.ln() + q * s,
            YoungSpec::Logbump { p, alpha } => {
                if s >= 2.0 * alpha {
                    p * s + alpha * s.ln()
                } else {
                    p * s + alpha * (2.0 * alpha).ln()
                }
            }
            YoungSpec::Exponential => {
                let t = s.exp();
                if t > 30.0 {
                    t + (-(-t).exp()).ln_1p()
                } else {
                    t.exp_m1().ln()
                }
            }
            YoungSpec::LinearSpliced { knee, base } => {
                let ln_knee = knee.ln();
                if s < ln_knee {
                    base.ln_eval_of_ln(ln_knee) - ln_knee + s
                } else {
                    base.ln_eval_of_ln(s)
                }
            }
            YoungSpec::Capped { cap, base } => {
                if s > cap.ln() {
                    f64::INFINITY
                } else {
                    base.ln_eval_of_ln(s)
                }
            }
            YoungSpec::Lambda { p, base } => base.ln_eval_of_ln(s / p),
            YoungSpec::Piecewise { .. } => self.eval_nonneg(s.exp()).ln(),
        }
    }

    /// Starting guess for `ln Φ^{-1}(e^{ln_u})`; only seeds the bracket.
    fn ln_inverse_seed(&self, ln_u: f64) -> f64 {
        match self {
            YoungSpec::Power { q, scale } => (ln_u - scale.ln()) / q,
            YoungSpec::Logbump { p, alpha } => {
                // Φ^{-1}(u) ≈ (u / ln(u)^α)^{1/p}
                if ln_u > 2.0 * alpha * p {
                    (ln_u - alpha * ln_u.ln()) / p
                } else {
                    (ln_u - alpha * (2.0 * alpha).ln()) / p
                }
            }
            YoungSpec::Lambda { p, base } => p * base.ln_inverse_seed(ln_u),
            _ => 0.0,
        }
    }
}

/// A Young function from the catalog together with its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct YoungFunction {
    spec: YoungSpec,
    label: String,
    finite_on_reals: bool,
    strictly_increasing: bool,
}

impl Serialize for YoungFunction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.spec.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for YoungFunction {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let spec = YoungSpec::deserialize(deserializer)?;
        YoungFunction::new(spec).map_err(serde::de::Error::custom)
    }
}

impl YoungFunction {
    pub fn new(spec: YoungSpec) -> Result<Self> {
        spec.validate()?;
        let label = spec.label();
        let finite_on_reals = spec.finite_on_reals();
        let mut phi = YoungFunction {
            spec,
            label,
            finite_on_reals,
            strictly_increasing: false,
        };
        phi.strictly_increasing = phi.finite_on_reals && phi.sampled_strictly_increasing();
        Ok(phi)
    }

    pub fn power(q: f64) -> Self {
        Self::new(YoungSpec::Power { q, scale: 1.0 }).expect("valid power Young function")
    }

    pub fn scaled_power(scale: f64, q: f64) -> Self {
        Self::new(YoungSpec::Power { q, scale }).expect("valid scaled power Young function")
    }

    pub fn logbump(p: f64, alpha: f64) -> Self {
        Self::new(YoungSpec::Logbump { p, alpha }).expect("valid logbump Young function")
    }

    pub fn exponential() -> Self {
        Self::new(YoungSpec::Exponential).expect("exponential Young function")
    }

    pub fn capped(base: &YoungFunction, cap: f64) -> Result<Self> {
        Self::new(YoungSpec::Capped {
            cap,
            base: Box::new(base.spec.clone()),
        })
    }

    pub fn linear_spliced(base: &YoungFunction, knee: f64) -> Result<Self> {
        Self::new(YoungSpec::LinearSpliced {
            knee,
            base: Box::new(base.spec.clone()),
        })
    }

    pub fn spec(&self) -> &YoungSpec {
        &self.spec
    }

    pub fn finite_on_reals(&self) -> bool {
        self.finite_on_reals
    }

    pub fn strictly_increasing_on_nonneg(&self) -> bool {
        self.strictly_increasing
    }

    // Piecewise inputs are not monotone by construction; everything else is.
    fn sampled_strictly_increasing(&self) -> bool {
        if !matches!(self.spec, YoungSpec::Piecewise { .. }) {
            return true;
        }
        let grid = log_grid(1e-6, 1e6, 4096);
        let mut prev = 0.0;
        for t in grid {
            let v = self.eval(t);
            if !(v > prev) {
                return false;
            }
            prev = v;
        }
        true
    }

    /// `ln Φ(e^s)`.
    pub fn ln_eval_of_ln(&self, s: f64) -> f64 {
        self.spec.ln_eval_of_ln(s)
    }

    fn require_invertible(&self) -> Result<()> {
        if self.strictly_increasing {
            Ok(())
        } else {
            Err(Error::NotInvertible {
                label: self.label.clone(),
            })
        }
    }

    /// Numeric inverse on `[0, ∞)`: bracket by doubling from `t = 1`, then
    /// bisect until `|Φ(t) - u| <= 1e-14 u` or the bracket is `1e-15`-relative.
    pub fn invert(&self, u: f64) -> Result<f64> {
        self.require_invertible()?;
        if !(u >= 0.0) {
            return invalid(format!("cannot invert {} at u = {u}", self.label));
        }
        if u == 0.0 {
            return Ok(0.0);
        }
        let fail = || Error::BracketFailure {
            label: self.label.clone(),
            u,
        };
        if !u.is_finite() {
            return Err(fail());
        }
        let (mut lo, mut hi) = (1.0f64, 1.0f64);
        if self.eval(1.0) < u {
            while self.eval(hi) < u {
                lo = hi;
                hi *= 2.0;
                if !hi.is_finite() {
                    return Err(fail());
                }
            }
        } else {
            while self.eval(lo) >= u {
                hi = lo;
                lo *= 0.5;
                if lo == 0.0 {
                    return Err(fail());
                }
            }
        }
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let v = self.eval(mid);
            if (v - u).abs() <= 1e-14 * u || hi - lo <= 1e-15 * hi {
                return Ok(mid);
            }
            if v < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (vl, vh) = (self.eval(lo), self.eval(hi));
        Ok(if (vl - u).abs() <= (vh - u).abs() { lo } else { hi })
    }

    /// `ln Φ^{-1}(e^{ln_u})`, by bisection on `s = ln t`. Works for arguments
    /// far outside the double range (e.g. `u = e^{500000}`).
    pub fn ln_inverse(&self, ln_u: f64) -> Result<f64> {
        self.require_invertible()?;
        if ln_u.is_nan() {
            return invalid("ln_inverse of NaN");
        }
        if ln_u == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        if ln_u == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        let g = |s: f64| self.spec.ln_eval_of_ln(s);
        let seed = self.spec.ln_inverse_seed(ln_u);
        let seed = if seed.is_finite() { seed } else { 0.0 };
        let (mut lo, mut hi) = (seed - 0.5, seed + 0.5);
        let mut step = 1.0;
        let mut guard = 0;
        while g(lo) >= ln_u {
            lo -= step;
            step *= 2.0;
            guard += 1;
            if guard > 2000 || !lo.is_finite() {
                return Err(Error::BracketFailure {
                    label: self.label.clone(),
                    u: ln_u.exp(),
                });
            }
        }
        step = 1.0;
        while g(hi) < ln_u {
            hi += step;
            step *= 2.0;
            guard += 1;
            if guard > 4000 || !hi.is_finite() {
                return Err(Error::BracketFailure {
                    label: self.label.clone(),
                    u: ln_u.exp(),
                });
            }
        }
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) < ln_u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

impl Young for YoungFunction {
    fn eval(&self, t: f64) -> f64 {
        self.spec.eval_nonneg(t.abs())
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Conjugate exponent pair `(p, p')` with `1/p + 1/p' = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugateExponent {
    pub p: f64,
    pub p_prime: f64,
}

impl ConjugateExponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return invalid(format!("conjugate exponent needs 1 < p < inf, got {p}"));
        }
        Ok(Self { p, p_prime: p / (p - 1.0) })
    }
}

/// Ψ(s) = sup_{t >= 0} (t|s| - Φ(t)), computed numerically.
#[derive(Debug, Clone)]
pub struct ComplementaryFunction {
    phi: YoungFunction,
    /// How many times the search bracket may double before the supremum is
    /// declared unbounded.
    pub max_doublings: u32,
}

impl ComplementaryFunction {
    pub fn new(phi: YoungFunction) -> Self {
        Self { phi, max_doublings: 200 }
    }

    pub fn phi(&self) -> &YoungFunction {
        &self.phi
    }

    pub fn value(&self, s: f64) -> Result<f64> {
        let s = s.abs();
        if s == 0.0 {
            return Ok(0.0);
        }
        let obj = |t: f64| {
            let v = self.phi.eval(t);
            if v.is_finite() {
                t * s - v
            } else {
                f64::NEG_INFINITY
            }
        };
        let mut best = 0.0f64;
        let mut t = 1.0;
        let mut doublings = 0;
        loop {
            let here = obj(t);
            let next = obj(2.0 * t);
            best = best.max(here).max(next);
            if next <= here {
                break;
            }
            t *= 2.0;
            doublings += 1;
            if doublings > self.max_doublings {
                return Err(Error::UnboundedSup { s, t_max: 2.0 * t });
            }
        }
        // golden-section maximisation of the concave objective on [0, 2t]
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (0.0, 2.0 * t);
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let mut f1 = obj(x1);
        let mut f2 = obj(x2);
        for _ in 0..200 {
            best = best.max(f1).max(f2);
            if hi - lo <= 1e-16 * hi.max(1e-300) {
                break;
            }
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = obj(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = obj(x1);
            }
        }
        Ok(best.max(f1).max(f2).max(0.0))
    }
}

impl Young for ComplementaryFunction {
    fn eval(&self, s: f64) -> f64 {
        self.value(s).unwrap_or(f64::INFINITY)
    }

    fn label(&self) -> String {
        format!("complementary({})", self.phi.label)
    }
}

/// `n` log-spaced points on `[lo, hi]` (inclusive).
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Log-spaced sampling grid used for certificates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertificateGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for CertificateGrid {
    fn default() -> Self {
        Self {
            lo: 1e-6,
            hi: 1e6,
            points: 512,
        }
    }
}

impl CertificateGrid {
    pub fn points(&self) -> Vec<f64> {
        log_grid(self.lo, self.hi, self.points)
    }
}

const MAX_LISTED: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairViolation {
    pub s: f64,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Sampled check of `Φ(st) <= Φ(s) Φ(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmultiplicativityReport {
    pub label: String,
    pub pairs_checked: usize,
    pub skipped_nonfinite: usize,
    pub violation_count: usize,
    pub violations: Vec<PairViolation>,
    pub passed: bool,
}

pub fn certify_submultiplicative(phi: &dyn Young, grid: &[f64]) -> SubmultiplicativityReport {
    let mut report = SubmultiplicativityReport {
        label: phi.label(),
        pairs_checked: 0,
        skipped_nonfinite: 0,
        violation_count: 0,
        violations: Vec::new(),
        passed: true,
    };
    let values: Vec<f64> = grid.iter().map(|&t| phi.eval(t)).collect();
    for (i, &s) in grid.iter().enumerate() {
        for (j, &t) in grid.iter().enumerate().skip(i) {
            let lhs = phi.eval(s * t);
            let rhs = values[i] * values[j];
            report.pairs_checked += 1;
            if !rhs.is_finite() {
                report.skipped_nonfinite += 1;
                continue;
            }
            if lhs > rhs * (1.0 + 1e-10) {
                report.violation_count += 1;
                if report.violations.len() < MAX_LISTED {
                    report.violations.push(PairViolation { s, t, lhs, rhs });
                }
            }
        }
    }
    report.passed = report.violation_count == 0;
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityWitness {
    pub s: f64,
    pub t: f64,
    /// `f((s+t)/2) - (f(s) + f(t))/2`, positive on violation.
    pub gap: f64,
}

/// Sampled midpoint-convexity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub label: String,
    pub pairs_checked: usize,
    pub violation_count: usize,
    pub worst: Option<ConvexityWitness>,
    pub violations: Vec<ConvexityWitness>,
    pub passed: bool,
}

pub fn certify_convex(f: &dyn Young, grid: &[f64]) -> ConvexityReport {
    let mut report = ConvexityReport {
        label: f.label(),
        pairs_checked: 0,
        violation_count: 0,
        worst: None,
        violations: Vec::new(),
        passed: true,
    };
    let values: Vec<f64> = grid.iter().map(|&t| f.eval(t)).collect();
    let mut worst_rel = 0.0;
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            let (fs, ft) = (values[i], values[j]);
            if !(fs.is_finite() && ft.is_finite()) {
                continue;
            }
            report.pairs_checked += 1;
            let chord = 0.5 * (fs + ft);
            let mid = f.eval(0.5 * (grid[i] + grid[j]));
            let gap = mid - chord;
            if gap > 1e-12 * chord.abs() + 1e-300 {
                report.violation_count += 1;
                let w = ConvexityWitness {
                    s: grid[i],
                    t: grid[j],
                    gap,
                };
                let rel = gap / chord.abs().max(1e-300);
                if rel > worst_rel {
                    worst_rel = rel;
                    report.worst = Some(w);
                }
                if report.violations.len() < MAX_LISTED {
                    report.violations.push(w);
                }
            }
        }
    }
    report.passed = report.violation_count == 0;
    report
}

/// Λ(t) = Φ(|t|^{1/p}), returned only if it passes the convexity certificate.
pub fn lambda_transform(phi: &YoungFunction, p: f64, grid: &CertificateGrid) -> Result<(YoungFunction, ConvexityReport)> {
    if !(p > 1.0) {
        return invalid(format!("lambda transform needs p > 1, got {p}"));
    }
    let lambda = YoungFunction::new(YoungSpec::Lambda {
        p,
        base: Box::new(phi.spec.clone()),
    })?;
    let report = certify_convex(&lambda, &grid.points());
    match report.worst {
        Some(w) if !report.passed => Err(Error::ConvexityViolation { s: w.s, t: w.t, gap: w.gap }),
        _ => Ok((lambda, report)),
    }
}

/// All sampled Young-function properties in one place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YoungCertificate {
    pub label: String,
    pub vanishes_at_zero: bool,
    pub even: bool,
    pub nondecreasing: bool,
    pub convexity: ConvexityReport,
    pub invertible: bool,
    pub max_inverse_roundtrip_error: Option<f64>,
    pub passed: bool,
}

pub fn certify_young(phi: &YoungFunction, grid: &CertificateGrid) -> YoungCertificate {
    let pts = grid.points();
    let vanishes_at_zero = phi.eval(0.0) == 0.0;
    let even = pts.iter().all(|&t| phi.eval(-t) == phi.eval(t));
    let nondecreasing = pts.windows(2).all(|w| phi.eval(w[1]) >= phi.eval(w[0]));
    let convexity = certify_convex(phi, &pts);
    let invertible = phi.strictly_increasing_on_nonneg();
    let max_inverse_roundtrip_error = if invertible {
        let mut worst = 0.0f64;
        for u in log_grid(1e-6, 1e6, 97) {
            match phi.invert(u) {
                Ok(t) => worst = worst.max((phi.eval(t) - u).abs() / u),
                Err(_) => worst = f64::INFINITY,
            }
        }
        Some(worst)
    } else {
        None
    };
    let passed = vanishes_at_zero
        && even
        && nondecreasing
        && convexity.passed
        && max_inverse_roundtrip_error.map_or(true, |e| e <= 1e-8);
    YoungCertificate {
        label: phi.label(),
        vanishes_at_zero,
        even,
        nondecreasing,
        convexity,
        invertible,
        max_inverse_roundtrip_error,
        passed,
    }
}

/// One-sided derivatives of the logbump function at its branch point
/// `t = e^{2α}`: `(left, right)` = derivative of `t^p (2α)^α` and of
/// `t^p (ln t)^α` there. Convexity at the splice needs `left <= right`.
pub fn logbump_branch_derivatives(p: f64, alpha: f64) -> (f64, f64) {
    let knee = (2.0 * alpha).exp();
    let base = knee.powf(p - 1.0) * (2.0 * alpha).powf(alpha);
    (p * base, base * (p + 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_values() {
        assert_eq!(YoungFunction::power(2.0).eval(3.0), 9.0);
        assert_eq!(YoungFunction::power(2.0).eval(-3.0), 9.0);
        assert_eq!(YoungFunction::logbump(2.0, 1.0).eval(0.0), 0.0);
        assert_eq!(YoungFunction::exponential().eval(0.0), 0.0);
    }

    #[test]
    fn logbump_branch_continuity() {
        let phi = YoungFunction::logbump(2.0, 1.0);
        let knee = 2f64.exp();
        let expect = 2.0 * 4f64.exp();
        assert!((phi.eval(knee) - expect).abs() < 1e-12 * expect);
        // lower branch formula at the knee
        let lower = knee.powi(2) * 2.0;
        assert!((lower - expect).abs() < 1e-12 * expect);
        // just below the knee
        let below = phi.eval(knee * (1.0 - 1e-12));
        assert!((below - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn invert_power_and_zero() {
        let phi = YoungFunction::power(3.0);
        assert!((phi.invert(8.0).unwrap() - 2.0).abs() < 1e-11);
        assert_eq!(phi.invert(0.0).unwrap(), 0.0);
        assert_eq!(YoungFunction::logbump(2.0, 1.0).invert(0.0).unwrap(), 0.0);
    }

    #[test]
    fn logbump_inverse_matches_asymptotic() {
        // Φ^{-1}(u) ~ p^{α/p} (u / ln(u)^α)^{1/p}; the bare form (u/ln(u)^α)^{1/p}
        // is only comparable up to the constant p^{α/p}
        let phi = YoungFunction::logbump(2.0, 1.0);
        let u: f64 = 1e6;
        let t = phi.invert(u).unwrap();
        let approx = 2f64.sqrt() * (u / u.ln()).sqrt();
        assert!((t / approx - 1.0).abs() < 0.10, "t={t}, approx={approx}");
        let ln_u = 1e4;
        let ratio = (phi.ln_inverse(ln_u).unwrap() - 0.5 * (ln_u - ln_u.ln())).exp();
        assert!((ratio / 2f64.sqrt() - 1.0).abs() < 1e-3, "{ratio}");
    }

    #[test]
    fn ln_inverse_agrees_with_invert() {
        for phi in [
            YoungFunction::power(2.5),
            YoungFunction::logbump(2.0, 1.0),
            YoungFunction::logbump(3.0, 0.7),
            YoungFunction::exponential(),
        ] {
            for u in [1e-5, 0.5, 3.0, 1e4] {
                let a = phi.invert(u).unwrap();
                let b = phi.ln_inverse(f64::ln(u)).unwrap().exp();
                assert!((a - b).abs() < 1e-9 * a, "{}: {a} vs {b}", phi.label());
            }
        }
    }

    #[test]
    fn ln_inverse_astronomical_argument() {
        let phi = YoungFunction::logbump(2.0, 1.0);
        let ln_u = 5e5;
        let s = phi.ln_inverse(ln_u).unwrap();
        assert!((phi.ln_eval_of_ln(s) - ln_u).abs() < 1e-9 * ln_u);
    }

    #[test]
    fn not_invertible_when_extended() {
        let phi = YoungFunction::capped(&YoungFunction::power(2.0), 3.0).unwrap();
        assert!(!phi.finite_on_reals());
        assert!(matches!(phi.invert(1.0), Err(Error::NotInvertible { .. })));
        assert_eq!(phi.eval(4.0), f64::INFINITY);
    }

    #[test]
    fn bracket_failure_for_infinite_target() {
        let phi = YoungFunction::power(2.0);
        assert!(matches!(phi.invert(f64::INFINITY), Err(Error::BracketFailure { .. })));
    }

    #[test]
    fn complementary_classical_pairs() {
        let half_square = ComplementaryFunction::new(YoungFunction::scaled_power(0.5, 2.0));
        assert!((half_square.value(4.0).unwrap() - 8.0).abs() < 1e-10);
        let cubic = ComplementaryFunction::new(YoungFunction::scaled_power(1.0 / 3.0, 3.0));
        assert!((cubic.value(1.0).unwrap() - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn complementary_logbump_against_grid_oracle() {
        let phi = YoungFunction::logbump(2.0, 1.0);
        let psi = ComplementaryFunction::new(phi.clone());
        // brute force: 10^6 points on [0, 1000]
        let n = 1_000_000;
        let mut oracle = f64::NEG_INFINITY;
        for i in 0..=n {
            let t = 1000.0 * i as f64 / n as f64;
            oracle = oracle.max(5.0 * t - phi.eval(t));
        }
        let v = psi.value(5.0).unwrap();
        assert!(v >= oracle - 1e-12);
        assert!(v - oracle < 1e-5, "{v} vs {oracle}");
    }

    #[test]
    fn complementary_unbounded_for_linear() {
        let psi = ComplementaryFunction::new(YoungFunction::power(1.0));
        assert!(matches!(psi.value(2.0), Err(Error::UnboundedSup { .. })));
        assert_eq!(psi.value(0.5).unwrap(), 0.0);
        assert_eq!(psi.eval(2.0), f64::INFINITY);
    }

    #[test]
    fn submultiplicative_certificates() {
        let grid = CertificateGrid::default().points();
        assert!(certify_submultiplicative(&YoungFunction::power(2.0), &grid).passed);
        let lb = log_grid(2f64.exp(), 10f64.exp(), 128);
        assert!(certify_submultiplicative(&YoungFunction::logbump(2.0, 1.0), &lb).passed);
        // e^{|t|}-1: direct evaluation says (e^{0.01}-1) <= (e^{0.1}-1)^2, so no violation at 0.1
        let exp = YoungFunction::exponential();
        assert!(exp.eval(0.01) <= exp.eval(0.1).powi(2));
        assert!(certify_submultiplicative(&exp, &[0.1]).passed);
        // but at s = t = 2: e^4 - 1 > (e^2 - 1)^2
        let r = certify_submultiplicative(&exp, &[0.1, 2.0]);
        assert!(!r.passed);
        assert!(r.violations.iter().any(|v| v.s == 2.0 && v.t == 2.0));
    }

    #[test]
    fn lambda_transform_cases() {
        let grid = CertificateGrid::default();
        let (lam, cert) = lambda_transform(&YoungFunction::power(4.0), 2.0, &grid).unwrap();
        assert!(cert.passed);
        assert!((lam.eval(3.0) - 9.0).abs() < 1e-12);
        let (lam, _) = lambda_transform(&YoungFunction::logbump(2.0, 1.0), 2.0, &grid).unwrap();
        let t = 100.0f64;
        assert!((lam.eval(t) - t * (t.ln() / 2.0)).abs() < 1e-10 * t);
        let err = lambda_transform(&YoungFunction::power(1.5), 2.0, &grid).unwrap_err();
        assert!(matches!(err, Error::ConvexityViolation { gap, .. } if gap > 0.0));
    }

    #[test]
    fn branch_derivative_inequality() {
        let (left, right) = logbump_branch_derivatives(2.0, 1.0);
        assert!(left <= right);
        let phi = YoungFunction::logbump(2.0, 1.0);
        let knee = 2f64.exp();
        let h = 1e-6;
        let num_left = (phi.eval(knee) - phi.eval(knee - h)) / h;
        let num_right = (phi.eval(knee + h) - phi.eval(knee)) / h;
        assert!((num_left / left - 1.0).abs() < 1e-4);
        assert!((num_right / right - 1.0).abs() < 1e-4);
    }

    #[test]
    fn spec_json_schema() {
        let phi: YoungFunction = serde_json::from_str(r#"{"kind":"power","q":2.0}"#).unwrap();
        assert_eq!(phi, YoungFunction::power(2.0));
        let phi: YoungFunction = serde_json::from_str(r#"{"kind":"logbump","p":2.0,"alpha":1.0}"#).unwrap();
        assert_eq!(phi.label(), "logbump(p=2, alpha=1)");
        assert!(serde_json::from_str::<YoungFunction>(r#"{"kind":"power","q":0.5}"#).is_err());
    }

    #[test]
    fn piecewise_user_function() {
        let spec = YoungSpec::Piecewise {
            pieces: vec![
                PowerPiece { from: 0.0, coef: 1.0, exponent: 2.0, log_power: 0.0 },
                PowerPiece { from: 1.0, coef: 1.0, exponent: 3.0, log_power: 0.0 },
            ],
        };
        let phi = YoungFunction::new(spec).unwrap();
        assert!(phi.strictly_increasing_on_nonneg());
        assert_eq!(phi.eval(2.0), 8.0);
        assert!(certify_young(&phi, &CertificateGrid::default()).passed);
    }
}
