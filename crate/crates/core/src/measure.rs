//! Weights and measures on `[a, b]`: a density plus finitely many atoms,
//! with cumulative masses in closed form where one is known and from a
//! precomputed quadrature table otherwise.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::function::RealFunction;
use crate::quadrature::{integrate, integrate_pieces, ln_add_exp, QuadratureConfig};

fn one() -> f64 {
    1.0
}

type Closure = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user density given by closures; `cumulative(x)` (if present) must
/// return `∫_a^x density`.
#[derive(Clone)]
pub struct CustomDensity {
    pub label: String,
    pub density: Closure,
    pub cumulative: Option<Closure>,
    pub breakpoints: Vec<f64>,
}

impl CustomDensity {
    pub fn new(label: impl Into<String>, density: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            density: Arc::new(density),
            cumulative: None,
            breakpoints: Vec::new(),
        }
    }

    pub fn with_cumulative(mut self, cumulative: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.cumulative = Some(Arc::new(cumulative));
        self
    }

    pub fn with_breakpoints(mut self, breakpoints: Vec<f64>) -> Self {
        self.breakpoints = breakpoints;
        self
    }
}

impl std::fmt::Debug for CustomDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CustomDensity")
            .field("label", &self.label)
            .field("closed_form", &self.cumulative.is_some())
            .finish()
    }
}

impl PartialEq for CustomDensity {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.density, &other.density)
    }
}

impl Serialize for CustomDensity {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("CustomDensity", 2)?;
        s.serialize_field("label", &self.label)?;
        s.serialize_field("closed_form", &self.cumulative.is_some())?;
        s.end()
    }
}

/// Density with respect to Lebesgue measure; `d = x - a` below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Density {
    Zero,
    /// constant `scale`
    Lebesgue {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale · d^exponent`, exponent > -1
    Power {
        exponent: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `values[i]` on `[knots[i], knots[i+1])`; knots span `[a, b]`.
    PiecewiseConstant { knots: Vec<f64>, values: Vec<f64> },
    /// `2 e^{-1/d²} / d³`, whose mass on `[a, x]` is `e^{-1/d²}`.
    #[serde(rename = "expdeg")]
    ExpDegenerate,
    #[serde(skip_deserializing)]
    Custom(CustomDensity),
}

/// Quadrature table for densities without a closed-form cumulative.
#[derive(Debug, Clone, PartialEq)]
struct CumulativeTable {
    nodes: Vec<f64>,
    prefix: Vec<f64>,
    suffix: Vec<f64>,
}

const TABLE_CELLS: usize = 256;

/// A measure on `[a, b]`: density plus atoms `(location, mass)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureConfig", into = "MeasureConfig")]
pub struct MeasureSpec {
    a: f64,
    b: f64,
    density: Density,
    atoms: Vec<(f64, f64)>,
    quadrature: QuadratureConfig,
    table: Option<Arc<CumulativeTable>>,
    density_total: f64,
}

/// JSON form of a [`MeasureSpec`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub a: f64,
    pub b: f64,
    pub density: Density,
    #[serde(default)]
    pub atoms: Vec<(f64, f64)>,
}

impl TryFrom<MeasureConfig> for MeasureSpec {
    type Error = Error;
    fn try_from(c: MeasureConfig) -> Result<Self> {
        MeasureSpec::new(c.a, c.b, c.density, c.atoms)
    }
}

impl From<MeasureSpec> for MeasureConfig {
    fn from(m: MeasureSpec) -> Self {
        MeasureConfig {
            a: m.a,
            b: m.b,
            density: m.density,
            atoms: m.atoms,
        }
    }
}

impl MeasureSpec {
    pub fn new(a: f64, b: f64, density: Density, atoms: Vec<(f64, f64)>) -> Result<Self> {
        Self::with_quadrature(a, b, density, atoms, QuadratureConfig::default())
    }

    pub fn with_quadrature(
        a: f64,
        b: f64,
        density: Density,
        mut atoms: Vec<(f64, f64)>,
        quadrature: QuadratureConfig,
    ) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return invalid(format!("measure needs finite a < b (a={a}, b={b})"));
        }
        for &(x, m) in &atoms {
            if !(a <= x && x <= b) || !(m > 0.0 && m.is_finite()) {
                return invalid(format!("atom ({x}, {m}) must lie in [a, b] with positive finite mass"));
            }
        }
        atoms.sort_by(|p, q| p.0.total_cmp(&q.0));
        match &density {
            Density::Lebesgue { scale } if !(*scale >= 0.0 && scale.is_finite()) => {
                return invalid("lebesgue scale must be finite and >= 0");
            }
            Density::Power { exponent, scale } if !(*exponent > -1.0) || !(*scale >= 0.0 && scale.is_finite()) => {
                return invalid("power density needs exponent > -1 and scale >= 0");
            }
            Density::PiecewiseConstant { knots, values } => {
                if knots.len() != values.len() + 1 || knots.len() < 2 {
                    return invalid("piecewise_constant density needs one value per knot interval");
                }
                if knots[0] != a || knots[knots.len() - 1] != b {
                    return invalid("piecewise_constant knots must start at a and end at b");
                }
                if knots.windows(2).any(|w| !(w[1] > w[0])) {
                    return invalid("piecewise_constant knots must be strictly increasing");
                }
                if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return invalid("piecewise_constant values must be finite and >= 0");
                }
            }
            _ => {}
        }
        let mut m = MeasureSpec {
            a,
            b,
            density,
            atoms,
            quadrature,
            table: None,
            density_total: 0.0,
        };
        if let Density::Custom(c) = &m.density {
            if c.cumulative.is_none() {
                m.table = Some(Arc::new(m.build_table(c)?));
            }
        }
        m.density_total = m.density_left(b);
        if !m.density_total.is_finite() {
            return Err(Error::NonFinite(format!("density mass on [{a}, {b}]")));
        }
        Ok(m)
    }

    pub fn lebesgue(a: f64, b: f64) -> Self {
        Self::new(a, b, Density::Lebesgue { scale: 1.0 }, Vec::new()).expect("a < b")
    }

    /// The infinitely degenerate weight `2 e^{-1/x²}/x³` on `[0, b]`.
    pub fn exp_degenerate(b: f64) -> Result<Self> {
        Self::new(0.0, b, Density::ExpDegenerate, Vec::new())
    }

    pub fn atoms_only(a: f64, b: f64, atoms: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(a, b, Density::Zero, atoms)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn has_closed_form(&self) -> bool {
        !matches!(&self.density, Density::Custom(c) if c.cumulative.is_none())
    }

    /// Density breakpoints and atom locations strictly inside `(a, b)`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = match &self.density {
            Density::PiecewiseConstant { knots, .. } => knots.clone(),
            Density::Custom(c) => c.breakpoints.clone(),
            _ => Vec::new(),
        };
        pts.extend(self.atoms.iter().map(|p| p.0));
        pts.retain(|&x| self.a < x && x < self.b);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Density at `x`. Piecewise-constant densities are right-continuous
    /// (the last cell covers `b`).
    pub fn density_at(&self, x: f64) -> f64 {
        let d = x - self.a;
        match &self.density {
            Density::Zero => 0.0,
            Density::Lebesgue { scale } => *scale,
            Density::Power { exponent, scale } => {
                if d == 0.0 && *exponent == 0.0 {
                    *scale
                } else {
                    scale * d.powf(*exponent)
                }
            }
            Density::PiecewiseConstant { knots, values } => {
                let i = knots.partition_point(|&k| k <= x);
                values[i.saturating_sub(1).min(values.len() - 1)]
            }
            Density::ExpDegenerate => {
                if d <= 0.0 {
                    0.0
                } else {
                    self.ln_density_at(x).exp()
                }
            }
            Density::Custom(c) => (c.density)(x),
        }
    }

    pub fn ln_density_at(&self, x: f64) -> f64 {
        let d = x - self.a;
        match &self.density {
            Density::ExpDegenerate => {
                if d <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    std::f64::consts::LN_2 - 1.0 / (d * d) - 3.0 * d.ln()
                }
            }
            Density::Power { exponent, scale } if d > 0.0 => scale.ln() + exponent * d.ln(),
            _ => self.density_at(x).ln(),
        }
    }

    fn build_table(&self, c: &CustomDensity) -> Result<CumulativeTable> {
        let mut nodes: Vec<f64> = (0..=TABLE_CELLS)
            .map(|i| self.a + (self.b - self.a) * i as f64 / TABLE_CELLS as f64)
            .collect();
        nodes.extend(c.breakpoints.iter().copied().filter(|&x| self.a < x && x < self.b));
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let cells: Vec<f64> = nodes
            .windows(2)
            .map(|w| integrate(|x| (c.density)(x), w[0], w[1], &self.quadrature).map(|e| e.value))
            .collect::<Result<_>>()?;
        let mut prefix = vec![0.0];
        for v in &cells {
            prefix.push(prefix.last().unwrap() + v);
        }
        let mut suffix = vec![0.0; nodes.len()];
        for i in (0..cells.len()).rev() {
            suffix[i] = suffix[i + 1] + cells[i];
        }
        Ok(CumulativeTable { nodes, prefix, suffix })
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.a, self.b)
    }

    /// `∫_a^x density`.
    pub fn density_left(&self, x: f64) -> f64 {
        let x = self.clamp(x);
        let d = x - self.a;
        match &self.density {
            Density::Zero => 0.0,
            Density::Lebesgue { scale } => scale * d,
            Density::Power { exponent, scale } => scale * d.powf(exponent + 1.0) / (exponent + 1.0),
            Density::PiecewiseConstant { knots, values } => {
                let mut acc = 0.0;
                for (i, v) in values.iter().enumerate() {
                    if knots[i] >= x {
                        break;
                    }
                    acc += v * (knots[i + 1].min(x) - knots[i]);
                }
                acc
            }
            Density::ExpDegenerate => {
                if d <= 0.0 {
                    0.0
                } else {
                    (-1.0 / (d * d)).exp()
                }
            }
            Density::Custom(c) => match (&c.cumulative, &self.table) {
                (Some(cum), _) => cum(x),
                (None, Some(t)) => {
                    let i = t.nodes.partition_point(|&k| k <= x).saturating_sub(1);
                    let rest = integrate(|s| (c.density)(s), t.nodes[i], x, &self.quadrature)
                        .map(|e| e.value)
                        .unwrap_or(f64::NAN);
                    t.prefix[i] + rest
                }
                (None, None) => f64::NAN,
            },
        }
    }

    /// `∫_x^b density`, computed without cancellation near `b` where possible.
    pub fn density_right(&self, x: f64) -> f64 {
        let x = self.clamp(x);
        match &self.density {
            Density::Zero => 0.0,
            Density::Lebesgue { scale } => scale * (self.b - x),
            Density::PiecewiseConstant { knots, values } => {
                let mut acc = 0.0;
                for (i, v) in values.iter().enumerate().rev() {
                    if knots[i + 1] <= x {
                        break;
                    }
                    acc += v * (knots[i + 1] - knots[i].max(x));
                }
                acc
            }
            Density::ExpDegenerate => self.ln_density_right(x).exp(),
            Density::Custom(c) if c.cumulative.is_none() => {
                let t = self.table.as_ref().expect("table built for custom densities");
                let i = t.nodes.partition_point(|&k| k < x).min(t.nodes.len() - 1);
                let rest = integrate(|s| (c.density)(s), x, t.nodes[i], &self.quadrature)
                    .map(|e| e.value)
                    .unwrap_or(f64::NAN);
                t.suffix[i] + rest
            }
            _ => self.density_total - self.density_left(x),
        }
    }

    fn ln_density_left(&self, x: f64) -> f64 {
        match &self.density {
            Density::ExpDegenerate => {
                let d = self.clamp(x) - self.a;
                if d <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -1.0 / (d * d)
                }
            }
            _ => self.density_left(x).ln(),
        }
    }

    fn ln_density_right(&self, x: f64) -> f64 {
        match &self.density {
            Density::ExpDegenerate => {
                let d = self.clamp(x) - self.a;
                let db = self.b - self.a;
                if d <= 0.0 {
                    return -1.0 / (db * db);
                }
                // e^{-1/db²} (1 - e^{1/db² - 1/d²})
                let gap = 1.0 / (db * db) - 1.0 / (d * d);
                -1.0 / (db * db) + (-gap.exp_m1()).ln()
            }
            _ => self.density_right(x).ln(),
        }
    }

    fn atoms_in(&self, lo: f64, hi: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|(x, _)| lo <= *x && *x <= hi)
            .map(|p| p.1)
            .sum()
    }

    /// Mass of `[a, x]` (atoms at `x` included).
    pub fn mass_left(&self, x: f64) -> f64 {
        self.density_left(x) + self.atoms_in(self.a, x)
    }

    /// Mass of `[x, b]` (atoms at `x` included).
    pub fn mass_right(&self, x: f64) -> f64 {
        self.density_right(x) + self.atoms_in(x, self.b)
    }

    pub fn ln_mass_left(&self, x: f64) -> f64 {
        ln_add_exp(self.ln_density_left(x), self.atoms_in(self.a, x).ln())
    }

    pub fn ln_mass_right(&self, x: f64) -> f64 {
        ln_add_exp(self.ln_density_right(x), self.atoms_in(x, self.b).ln())
    }

    /// Density mass of `[x, y]`, atoms excluded.
    pub fn density_mass(&self, x: f64, y: f64) -> Result<f64> {
        if y <= x {
            return Ok(0.0);
        }
        let v = match &self.density {
            Density::Custom(c) if c.cumulative.is_none() => {
                // stay on the table where it helps, integrate the ragged ends
                let t = self.table.as_ref().expect("table built for custom densities");
                let i = t.nodes.partition_point(|&k| k < x);
                let j = t.nodes.partition_point(|&k| k <= y);
                if i < j {
                    let head = integrate(|s| (c.density)(s), x, t.nodes[i], &self.quadrature)?.value;
                    let tail = integrate(|s| (c.density)(s), t.nodes[j - 1], y, &self.quadrature)?.value;
                    head + (t.prefix[j - 1] - t.prefix[i]) + tail
                } else {
                    integrate(|s| (c.density)(s), x, y, &self.quadrature)?.value
                }
            }
            Density::ExpDegenerate => {
                let (lx, ly) = (self.ln_density_left(x), self.ln_density_left(y));
                // e^{ly} (1 - e^{lx - ly})
                if ly == f64::NEG_INFINITY {
                    0.0
                } else {
                    ly.exp() * -(lx - ly).exp_m1()
                }
            }
            _ => {
                let left = self.density_left(y) - self.density_left(x);
                let right = self.density_right(x) - self.density_right(y);
                // pick whichever side has the smaller cumulative to limit cancellation
                if self.density_left(x) <= self.density_right(y) {
                    left
                } else {
                    right
                }
            }
        };
        Ok(v.max(0.0))
    }

    /// Mass of `[x, y]`, atoms at both endpoints included.
    pub fn interval_mass(&self, x: f64, y: f64) -> Result<f64> {
        if !(self.a <= x && x <= y && y <= self.b) {
            return invalid(format!("interval [{x}, {y}] not inside [{}, {}]", self.a, self.b));
        }
        Ok(self.density_mass(x, y)? + self.atoms_in(x, y))
    }

    pub fn total_mass(&self) -> f64 {
        self.density_total + self.atoms.iter().map(|p| p.1).sum::<f64>()
    }

    /// `∫_lo^hi g(x) density(x) dx`, split at density breakpoints.
    pub fn integrate_density<G: Fn(f64) -> f64>(&self, g: G, lo: f64, hi: f64, extra_breaks: &[f64]) -> Result<f64> {
        if matches!(self.density, Density::Zero) || hi <= lo {
            return Ok(0.0);
        }
        let mut pts = vec![lo, hi];
        pts.extend(self.breakpoints().into_iter().chain(extra_breaks.iter().copied()).filter(|&x| lo < x && x < hi));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let integrand = |x: f64| {
            let d = self.density_at(x);
            if d == 0.0 {
                0.0
            } else {
                g(x) * d
            }
        };
        Ok(integrate_pieces(integrand, &pts, &self.quadrature)?.value)
    }
}

/// `(1/ν[a,b]) ∫ f dν`, atoms contributing `mass · f(location)`.
pub fn weighted_average(f: &dyn RealFunction, nu: &MeasureSpec) -> Result<f64> {
    let total = nu.total_mass();
    if !(total > 0.0) {
        return Err(Error::ZeroTotalMass);
    }
    let from_density = nu.integrate_density(|x| f.eval(x), nu.a, nu.b, &f.breakpoints())?;
    let from_atoms: f64 = nu.atoms.iter().map(|&(x, m)| m * f.eval(x)).sum();
    Ok((from_density + from_atoms) / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::PiecewiseLinearFunction;

    #[test]
    fn lebesgue_interval() {
        let m = MeasureSpec::lebesgue(0.0, 1.0);
        assert!((m.interval_mass(0.25, 0.75).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_weight_closed_form() {
        let w = MeasureSpec::exp_degenerate(2.0).unwrap();
        for x in [0.1, 0.5, 1.0, 1.7] {
            let v = w.interval_mass(0.0, x).unwrap();
            assert!((v - (-1.0 / (x * x)).exp()).abs() <= 1e-15 * v.max(1e-300));
        }
        assert!((w.mass_left(1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(w.density_at(0.0), 0.0);
        assert!(w.density_at(1e-3) == 0.0 || w.density_at(1e-3) < 1e-300);
        let x = 0.6;
        let sum = w.mass_left(x) + w.mass_right(x);
        assert!((sum - (-0.25f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_weight_quadrature_agrees() {
        let w = MeasureSpec::exp_degenerate(1.0).unwrap();
        let custom = MeasureSpec::new(
            0.0,
            1.0,
            Density::Custom(CustomDensity::new("expdeg-numeric", |x: f64| {
                if x <= 0.0 {
                    0.0
                } else {
                    2.0 * (-1.0 / (x * x)).exp() / (x * x * x)
                }
            })),
            Vec::new(),
        )
        .unwrap();
        for i in 1..=100 {
            let x = 0.2 + 0.8 * i as f64 / 100.0;
            let (c, q) = (w.mass_left(x), custom.mass_left(x));
            assert!((c - q).abs() <= 1e-8 * c, "x={x}: {c} vs {q}");
        }
    }

    #[test]
    fn atoms_are_closed_on_both_sides() {
        let m = MeasureSpec::atoms_only(0.0, 1.0, vec![(0.5, 1.0)]).unwrap();
        assert_eq!(m.interval_mass(0.5, 1.0).unwrap(), 1.0);
        assert_eq!(m.interval_mass(0.0, 0.5).unwrap(), 1.0);
        assert_eq!(m.interval_mass(0.6, 1.0).unwrap(), 0.0);
        assert_eq!(m.mass_left(0.5), 1.0);
        assert_eq!(m.mass_right(0.5), 1.0);
        assert_eq!(m.ln_mass_left(0.4), f64::NEG_INFINITY);
    }

    #[test]
    fn partition_additivity() {
        let m = MeasureSpec::new(
            0.0,
            2.0,
            Density::PiecewiseConstant {
                knots: vec![0.0, 0.7, 2.0],
                values: vec![1.5, 0.2],
            },
            vec![(0.3, 0.4), (2.0, 1.0)],
        )
        .unwrap();
        let cuts = [0.0, 0.1, 0.5, 0.9, 1.3, 2.0];
        let sum: f64 = cuts.windows(2).map(|w| m.interval_mass(w[0], w[1]).unwrap()).sum();
        // the atom at 2.0 is counted once; no atom sits at an interior cut
        assert!((sum - m.total_mass()).abs() < 1e-12);
        assert!((m.total_mass() - (1.05 + 0.26 + 1.4)).abs() < 1e-12);
    }

    #[test]
    fn power_density() {
        let m = MeasureSpec::new(1.0, 2.0, Density::Power { exponent: 2.0, scale: 3.0 }, vec![]).unwrap();
        assert!((m.total_mass() - 1.0).abs() < 1e-14);
        assert!((m.density_at(1.5) - 0.75).abs() < 1e-15);
        assert!((m.density_right(1.5) - (1.0 - 0.125)).abs() < 1e-14);
    }

    #[test]
    fn weighted_average_cases() {
        let leb = MeasureSpec::lebesgue(0.0, 1.0);
        let id = PiecewiseLinearFunction::affine(0.0, 1.0, 0.0, 1.0);
        assert!((weighted_average(&id, &leb).unwrap() - 0.5).abs() < 1e-14);
        let c = PiecewiseLinearFunction::constant(0.0, 1.0, 3.0);
        assert!((weighted_average(&c, &leb).unwrap() - 3.0).abs() < 1e-14);
        let atom = MeasureSpec::atoms_only(0.0, 1.0, vec![(0.3, 1.0)]).unwrap();
        assert!((weighted_average(&id, &atom).unwrap() - 0.3).abs() < 1e-15);
        let empty = MeasureSpec::new(0.0, 1.0, Density::Zero, vec![]).unwrap();
        assert_eq!(weighted_average(&id, &empty), Err(Error::ZeroTotalMass));
    }

    #[test]
    fn json_schema() {
        let m: MeasureSpec = serde_json::from_str(r#"{"a":0,"b":1,"density":{"kind":"lebesgue"},"atoms":[[0.5,2.0]]}"#).unwrap();
        assert!((m.total_mass() - 3.0).abs() < 1e-15);
        let m: MeasureSpec = serde_json::from_str(r#"{"a":0,"b":1,"density":{"kind":"expdeg"}}"#).unwrap();
        assert!((m.total_mass() - (-1.0f64).exp()).abs() < 1e-15);
        let m: MeasureSpec = serde_json::from_str(r#"{"a":0,"b":1,"density":{"kind":"power","exponent":1}}"#).unwrap();
        assert!((m.total_mass() - 0.5).abs() < 1e-15);
        assert!(serde_json::from_str::<MeasureSpec>(r#"{"a":1,"b":0,"density":{"kind":"lebesgue"}}"#).is_err());
        let round = serde_json::to_string(&m).unwrap();
        assert!(round.contains("\"power\""));
    }
}
