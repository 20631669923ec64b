//! Real functions on `[a, b]`: piecewise-linear Lipschitz functions, step
//! functions (exact modulars), and closure-backed functions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A real function on an interval, with the points where it is not smooth.
pub trait RealFunction: Sync {
    fn eval(&self, x: f64) -> f64;

    /// Kinks, jumps and sign changes; quadrature panels never straddle these.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn as_step(&self) -> Option<&StepFunction> {
        None
    }
}

/// Continuous piecewise-linear function through `(knots[i], values[i])`,
/// held constant outside the knot range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPiecewiseLinear")]
pub struct PiecewiseLinearFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPiecewiseLinear {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawPiecewiseLinear> for PiecewiseLinearFunction {
    type Error = crate::Error;
    fn try_from(raw: RawPiecewiseLinear) -> Result<Self> {
        PiecewiseLinearFunction::new(raw.knots, raw.values)
    }
}

impl PiecewiseLinearFunction {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return invalid("piecewise-linear function needs >= 2 knots and one value per knot");
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("piecewise-linear knots must be strictly increasing");
        }
        if knots.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return invalid("piecewise-linear knots and values must be finite");
        }
        Ok(Self { knots, values })
    }

    /// The line `f(x) = c0 + c1 x` on `[a, b]`.
    pub fn affine(a: f64, b: f64, c0: f64, c1: f64) -> Self {
        Self::new(vec![a, b], vec![c0 + c1 * a, c0 + c1 * b]).expect("a < b")
    }

    pub fn constant(a: f64, b: f64, c: f64) -> Self {
        Self::affine(a, b, c, 0.0)
    }

    /// Build from knots and slopes, starting at `value_at_a`.
    pub fn from_slopes(knots: Vec<f64>, slopes: &[f64], value_at_a: f64) -> Result<Self> {
        if slopes.len() + 1 != knots.len() {
            return invalid("need exactly one slope per knot interval");
        }
        let mut values = Vec::with_capacity(knots.len());
        values.push(value_at_a);
        for (i, s) in slopes.iter().enumerate() {
            let prev = values[i];
            values.push(prev + s * (knots[i + 1] - knots[i]));
        }
        Self::new(knots, values)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.knots
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(k, v)| (v[1] - v[0]) / (k[1] - k[0]))
            .collect()
    }

    pub fn lipschitz(&self) -> f64 {
        self.slopes().iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self {
            knots: self.knots.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            knots: self.knots.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Pointwise sum; knots are merged.
    pub fn add(&self, other: &Self) -> Self {
        let mut knots: Vec<f64> = self.knots.iter().chain(other.knots.iter()).copied().collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let values = knots.iter().map(|&x| self.eval(x) + other.eval(x)).collect();
        Self { knots, values }
    }

    /// Locations where the function crosses zero inside a segment.
    pub fn zero_crossings(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (k, v) in self.knots.windows(2).zip(self.values.windows(2)) {
            if (v[0] < 0.0 && v[1] > 0.0) || (v[0] > 0.0 && v[1] < 0.0) {
                out.push(k[0] + (k[1] - k[0]) * v[0] / (v[0] - v[1]));
            }
        }
        out
    }
}

impl RealFunction for PiecewiseLinearFunction {
    fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if x <= self.knots[0] {
            return self.values[0];
        }
        if x >= self.knots[n - 1] {
            return self.values[n - 1];
        }
        let i = self.knots.partition_point(|&k| k <= x) - 1;
        let t = (x - self.knots[i]) / (self.knots[i + 1] - self.knots[i]);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut pts = self.knots.clone();
        pts.extend(self.zero_crossings());
        pts.sort_by(f64::total_cmp);
        pts
    }
}

/// Piecewise-constant function: `levels[i]` on `(breaks[i], breaks[i+1])`.
/// Values exactly at a break default to the level on the right (the last
/// level at the right end) unless overridden in `point_values`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    breaks: Vec<f64>,
    levels: Vec<f64>,
    #[serde(default)]
    point_values: Vec<(f64, f64)>,
}

impl StepFunction {
    pub fn new(breaks: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if breaks.len() < 2 || levels.len() + 1 != breaks.len() {
            return invalid("step function needs n+1 breaks for n levels");
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("step function breaks must be strictly increasing");
        }
        if levels.iter().any(|v| !v.is_finite()) {
            return invalid("step function levels must be finite");
        }
        Ok(Self {
            breaks,
            levels,
            point_values: Vec::new(),
        })
    }

    /// `c χ_E` for `E = [lo, hi] ⊂ [a, b]`.
    pub fn indicator(a: f64, b: f64, lo: f64, hi: f64, c: f64) -> Result<Self> {
        if !(a <= lo && lo < hi && hi <= b) {
            return invalid("indicator interval must lie inside [a, b]");
        }
        let mut breaks = vec![a];
        let mut levels = Vec::new();
        if lo > a {
            breaks.push(lo);
            levels.push(0.0);
        }
        breaks.push(hi);
        levels.push(c);
        if hi < b {
            breaks.push(b);
            levels.push(0.0);
        }
        let mut f = Self::new(breaks, levels)?;
        f.point_values.push((lo, c));
        f.point_values.push((hi, c));
        Ok(f)
    }

    /// `left` on `[a, x]` and `right` on `[x, b]`, with value `at_x` at `x`.
    pub fn two_level(a: f64, x: f64, b: f64, left: f64, right: f64, at_x: f64) -> Result<Self> {
        let mut f = Self::new(vec![a, x, b], vec![left, right])?;
        f.point_values.push((x, at_x));
        f.point_values.push((a, left));
        Ok(f)
    }

    pub fn with_point_value(mut self, x: f64, v: f64) -> Self {
        self.point_values.retain(|(p, _)| *p != x);
        self.point_values.push((x, v));
        self
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            breaks: self.breaks.clone(),
            levels: self.levels.iter().map(|v| v * c).collect(),
            point_values: self.point_values.iter().map(|&(x, v)| (x, v * c)).collect(),
        }
    }
}

impl RealFunction for StepFunction {
    fn eval(&self, x: f64) -> f64 {
        if let Some(&(_, v)) = self.point_values.iter().find(|(p, _)| *p == x) {
            return v;
        }
        let n = self.levels.len();
        let i = self.breaks.partition_point(|&k| k <= x);
        self.levels[i.saturating_sub(1).min(n - 1)]
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }

    fn as_step(&self) -> Option<&StepFunction> {
        Some(self)
    }
}

type Closure = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A function given by a closure plus its known non-smooth points.
#[derive(Clone)]
pub struct FnFunction {
    f: Closure,
    breaks: Vec<f64>,
}

impl FnFunction {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, breaks: Vec<f64>) -> Self {
        Self { f: Arc::new(f), breaks }
    }
}

impl std::fmt::Debug for FnFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnFunction").field("breaks", &self.breaks).finish()
    }
}

impl RealFunction for FnFunction {
    fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}
