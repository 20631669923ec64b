//! Modulars, gauge (Luxemburg) norms, the Orlicz-norm bracket and the
//! generalized Minkowski check.

use std::cell::Cell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::function::{FnFunction, RealFunction};
use crate::measure::MeasureSpec;
use crate::young::Young;

/// Φ values above this are treated as an infinite modular.
const PHI_OVERFLOW: f64 = 1e250;

/// Bisection settings for [`gauge_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaugeConfig {
    /// Relative width of the final `k` bracket.
    pub k_rel_tol: f64,
    /// The bracket may grow or shrink by at most `2^max_expansions`.
    pub max_expansions: u32,
    /// Modular values above this count as `+inf`.
    pub modular_infinity: f64,
}

impl Default for GaugeConfig {
    fn default() -> Self {
        Self {
            k_rel_tol: 1e-13,
            max_expansions: 60,
            modular_infinity: 1e300,
        }
    }
}

/// `∫ Φ(f/k) dμ`, atoms included. Step functions are summed exactly.
/// Quadrature settings come from the measure.
pub fn modular(f: &dyn RealFunction, phi: &dyn Young, mu: &MeasureSpec, k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return invalid(format!("modular needs k > 0, got {k}"));
    }
    let atom_part = |acc: f64| -> f64 {
        mu.atoms().iter().fold(acc, |s, &(x, m)| s + m * phi.eval(f.eval(x) / k))
    };
    if let Some(step) = f.as_step() {
        let mut acc = 0.0;
        for (w, &level) in step.breaks().windows(2).zip(step.levels()) {
            if level == 0.0 {
                continue;
            }
            let mass = mu.density_mass(w[0], w[1])?;
            if mass > 0.0 {
                acc += phi.eval(level / k) * mass;
            }
        }
        return Ok(atom_part(acc));
    }
    let overflow = Cell::new(false);
    let integrand = |x: f64| {
        let v = phi.eval(f.eval(x) / k);
        if v > PHI_OVERFLOW {
            overflow.set(true);
            0.0
        } else {
            v
        }
    };
    let from_density = mu.integrate_density(integrand, mu.a(), mu.b(), &f.breakpoints())?;
    if overflow.get() {
        return Ok(f64::INFINITY);
    }
    Ok(atom_part(from_density))
}

/// Gauge norm together with its bisection diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaugeNorm {
    #[serde(with = "crate::ext")]
    pub norm: f64,
    /// Modular at the returned `k` (should be `<= 1`).
    #[serde(with = "crate::ext")]
    pub modular_at_norm: f64,
    /// The bracket hit `2^max_expansions`; `norm` is then `+inf`.
    pub expansion_limited: bool,
}

fn sup_abs_hint(f: &dyn RealFunction, mu: &MeasureSpec) -> f64 {
    let (a, b) = (mu.a(), mu.b());
    let mut pts: Vec<f64> = (0..=256).map(|i| a + (b - a) * i as f64 / 256.0).collect();
    pts.extend(f.breakpoints());
    pts.extend(mu.atoms().iter().map(|p| p.0));
    pts.into_iter()
        .filter(|&x| a <= x && x <= b)
        .map(|x| f.eval(x).abs())
        .fold(0.0, f64::max)
}

/// `inf{k > 0 : ∫Φ(f/k)dμ <= 1}` by bracketing and bisection in `ln k`.
pub fn gauge_norm(f: &dyn RealFunction, phi: &dyn Young, mu: &MeasureSpec, cfg: &GaugeConfig) -> Result<GaugeNorm> {
    let m = |k: f64| -> Result<f64> {
        let v = modular(f, phi, mu, k)?;
        Ok(if v > cfg.modular_infinity { f64::INFINITY } else { v })
    };
    let zero = GaugeNorm {
        norm: 0.0,
        modular_at_norm: 0.0,
        expansion_limited: false,
    };
    let start = sup_abs_hint(f, mu);
    if start == 0.0 || !start.is_finite() {
        if start == 0.0 {
            return Ok(zero);
        }
        return Err(Error::NonFinite(format!("sup |f| = {start}")));
    }
    let (mut lo, mut hi);
    let mut m_hi;
    let v = m(start)?;
    if v <= 1.0 {
        hi = start;
        m_hi = v;
        lo = start;
        let mut n = 0;
        loop {
            lo *= 0.5;
            n += 1;
            if m(lo)? > 1.0 {
                break;
            }
            hi = lo;
            if n >= cfg.max_expansions {
                // modular stays <= 1 as k -> 0: f vanishes μ-a.e.
                if m(start * f64::EPSILON)? == 0.0 {
                    return Ok(zero);
                }
                return Ok(GaugeNorm {
                    norm: hi,
                    modular_at_norm: m(hi)?,
                    expansion_limited: true,
                });
            }
        }
        m_hi = if hi == start { m_hi } else { m(hi)? };
    } else {
        lo = start;
        hi = start;
        let mut n = 0;
        loop {
            hi *= 2.0;
            n += 1;
            let v = m(hi)?;
            if v <= 1.0 {
                m_hi = v;
                break;
            }
            lo = hi;
            if n >= cfg.max_expansions {
                log::warn!("gauge norm bracket exceeded 2^{} x sup|f|", cfg.max_expansions);
                return Ok(GaugeNorm {
                    norm: f64::INFINITY,
                    modular_at_norm: v,
                    expansion_limited: true,
                });
            }
        }
    }
    while hi - lo > cfg.k_rel_tol * hi {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        let v = m(mid)?;
        if v <= 1.0 {
            hi = mid;
            m_hi = v;
        } else {
            lo = mid;
        }
    }
    Ok(GaugeNorm {
        norm: hi,
        modular_at_norm: m_hi,
        expansion_limited: false,
    })
}

/// Shorthand: the norm value only (`+inf` when the bracket is exhausted).
pub fn gauge_norm_value(f: &dyn RealFunction, phi: &dyn Young, mu: &MeasureSpec) -> Result<f64> {
    Ok(gauge_norm(f, phi, mu, &GaugeConfig::default())?.norm)
}

/// `∫ |f g| dμ`, atoms included.
pub fn pairing(f: &dyn RealFunction, g: &dyn RealFunction, mu: &MeasureSpec) -> Result<f64> {
    let mut breaks = f.breakpoints();
    breaks.extend(g.breakpoints());
    let dens = mu.integrate_density(|x| (f.eval(x) * g.eval(x)).abs(), mu.a(), mu.b(), &breaks)?;
    let atoms: f64 = mu.atoms().iter().map(|&(x, m)| m * (f.eval(x) * g.eval(x)).abs()).sum();
    Ok(dens + atoms)
}

/// `lower <= |f|_Φ <= upper` with `lower` from a finite dual family and
/// `upper = 2 ‖f‖_Φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrliczBracket {
    pub lower: f64,
    #[serde(with = "crate::ext")]
    pub upper: f64,
    #[serde(with = "crate::ext")]
    pub gauge: f64,
    pub dual_norms: Vec<f64>,
}

pub fn orlicz_norm_bracket(
    f: &dyn RealFunction,
    phi: &dyn Young,
    psi: &dyn Young,
    mu: &MeasureSpec,
    dual_family: &[&dyn RealFunction],
    cfg: &GaugeConfig,
) -> Result<OrliczBracket> {
    let mut lower: f64 = 0.0;
    let mut dual_norms = Vec::with_capacity(dual_family.len());
    for (index, g) in dual_family.iter().enumerate() {
        let norm = gauge_norm(*g, psi, mu, cfg)?.norm;
        if norm > 1.0 + 1e-8 {
            return Err(Error::DualOutsideBall { index, norm });
        }
        dual_norms.push(norm);
        lower = lower.max(pairing(f, *g, mu)?);
    }
    let gauge = gauge_norm(f, phi, mu, cfg)?.norm;
    Ok(OrliczBracket {
        lower,
        upper: 2.0 * gauge,
        gauge,
        dual_norms,
    })
}

/// A kernel `F(x, t)` for the Minkowski check.
pub trait Kernel: Sync {
    fn eval(&self, x: f64, t: f64) -> f64;
    /// Non-smooth points of `x ↦ F(x, t)`.
    fn x_breakpoints(&self, _t: f64) -> Vec<f64> {
        Vec::new()
    }
}

/// Quadrature nodes in `t` with positive weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TNodes {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl TNodes {
    /// Composite 15-point Kronrod rule on `cells` equal pieces of `[lo, hi]`.
    pub fn kronrod(lo: f64, hi: f64, cells: usize) -> Self {
        let pts: Vec<f64> = (0..=cells).map(|i| lo + (hi - lo) * i as f64 / cells as f64).collect();
        Self::kronrod_pieces(&pts)
    }

    /// One 15-point Kronrod rule per consecutive pair of `points`.
    pub fn kronrod_pieces(points: &[f64]) -> Self {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for w in points.windows(2) {
            for (x, wt) in crate::quadrature::kronrod_rule(w[0], w[1]) {
                nodes.push(x);
                weights.push(wt);
            }
        }
        Self { nodes, weights }
    }

    /// Midpoint rule on the cells of a partition (exact for kernels that are
    /// constant in `t` on each cell).
    pub fn cell_midpoints(points: &[f64]) -> Self {
        Self {
            nodes: points.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect(),
            weights: points.windows(2).map(|w| w[1] - w[0]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiReport {
    /// `‖∫F(·,t)dt‖_Φ`
    #[serde(with = "crate::ext")]
    pub lhs: f64,
    /// `∫‖F(·,t)‖_Φ dt`
    #[serde(with = "crate::ext")]
    pub rhs: f64,
    pub tolerance: f64,
    /// `lhs <= 2 rhs + tolerance`
    pub passed: bool,
    /// `lhs > rhs`, i.e. the factor 2 was actually needed.
    pub uses_factor_two_slack: bool,
    /// Some intermediate norm was not finite; no conclusion is drawn.
    pub nonfinite: bool,
}

pub fn minkowski_check(
    kernel: &dyn Kernel,
    phi: &dyn Young,
    mu: &MeasureSpec,
    t: &TNodes,
    cfg: &GaugeConfig,
) -> Result<MinkowskiReport> {
    if t.nodes.len() != t.weights.len() || t.weights.iter().any(|w| !(*w > 0.0)) {
        return invalid("t-nodes need one positive weight per node");
    }
    let slice_norms: Vec<f64> = t
        .nodes
        .par_iter()
        .map(|&tj| {
            let slice = SliceFunction { kernel, t: tj };
            gauge_norm(&slice, phi, mu, cfg).map(|g| g.norm)
        })
        .collect::<Result<_>>()?;
    let rhs: f64 = slice_norms.iter().zip(&t.weights).map(|(n, w)| n * w).sum();
    let mut breaks: Vec<f64> = t.nodes.iter().flat_map(|&tj| kernel.x_breakpoints(tj)).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let integrated = IntegratedKernel {
        kernel,
        t,
        breaks,
    };
    let lhs = gauge_norm(&integrated, phi, mu, cfg)?.norm;
    let tolerance = 1e-8 * (1.0 + rhs.abs());
    let nonfinite = !(lhs.is_finite() && rhs.is_finite());
    Ok(MinkowskiReport {
        lhs,
        rhs,
        tolerance,
        passed: !nonfinite && lhs <= 2.0 * rhs + tolerance,
        uses_factor_two_slack: !nonfinite && lhs > rhs + tolerance,
        nonfinite,
    })
}

struct SliceFunction<'a> {
    kernel: &'a dyn Kernel,
    t: f64,
}

impl RealFunction for SliceFunction<'_> {
    fn eval(&self, x: f64) -> f64 {
        self.kernel.eval(x, self.t)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.kernel.x_breakpoints(self.t)
    }
}

struct IntegratedKernel<'a> {
    kernel: &'a dyn Kernel,
    t: &'a TNodes,
    breaks: Vec<f64>,
}

impl RealFunction for IntegratedKernel<'_> {
    fn eval(&self, x: f64) -> f64 {
        self.t
            .nodes
            .iter()
            .zip(&self.t.weights)
            .map(|(&tj, &w)| w * self.kernel.eval(x, tj))
            .sum()
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

/// Closure-backed kernel.
pub struct FnKernel<F, B> {
    pub f: F,
    pub breaks: B,
}

impl<F, B> Kernel for FnKernel<F, B>
where
    F: Fn(f64, f64) -> f64 + Sync,
    B: Fn(f64) -> Vec<f64> + Sync,
{
    fn eval(&self, x: f64, t: f64) -> f64 {
        (self.f)(x, t)
    }
    fn x_breakpoints(&self, t: f64) -> Vec<f64> {
        (self.breaks)(t)
    }
}

/// `|f|^p` as a function, used for the `‖f‖_Φ^p = ‖|f|^p‖_Λ` identity.
pub fn abs_power(f: impl RealFunction + Send + Clone + 'static, p: f64) -> FnFunction {
    let breaks = f.breakpoints();
    FnFunction::new(move |x| f.eval(x).abs().powf(p), breaks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::{PiecewiseLinearFunction, StepFunction};
    use crate::young::{ComplementaryFunction, YoungFunction};

    fn leb() -> MeasureSpec {
        MeasureSpec::lebesgue(0.0, 1.0)
    }

    #[test]
    fn modular_examples() {
        let sq = YoungFunction::power(2.0);
        let zero = PiecewiseLinearFunction::constant(0.0, 1.0, 0.0);
        assert_eq!(modular(&zero, &sq, &leb(), 0.3).unwrap(), 0.0);
        let chi = StepFunction::indicator(0.0, 1.0, 0.0, 0.25, 1.0).unwrap();
        assert!((modular(&chi, &sq, &leb(), 0.5).unwrap() - 1.0).abs() < 1e-15);
        let id = PiecewiseLinearFunction::affine(0.0, 1.0, 0.0, 1.0);
        assert!((modular(&id, &sq, &leb(), 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn gauge_recovers_l2() {
        let id = PiecewiseLinearFunction::affine(0.0, 1.0, 0.0, 1.0);
        let n = gauge_norm(&id, &YoungFunction::power(2.0), &leb(), &GaugeConfig::default()).unwrap();
        assert!((n.norm - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(n.modular_at_norm <= 1.0);
    }

    #[test]
    fn characteristic_identity() {
        let chi = StepFunction::indicator(0.0, 1.0, 0.0, 0.25, 1.0).unwrap();
        let n = gauge_norm_value(&chi, &YoungFunction::power(2.0), &leb()).unwrap();
        assert!((n - 0.5).abs() < 1e-12);
        let phi = YoungFunction::logbump(2.0, 1.0);
        let n = gauge_norm_value(&chi, &phi, &leb()).unwrap();
        assert!((n * phi.invert(4.0).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_function_and_null_support() {
        let zero = PiecewiseLinearFunction::constant(0.0, 1.0, 0.0);
        assert_eq!(gauge_norm_value(&zero, &YoungFunction::power(2.0), &leb()).unwrap(), 0.0);
        // supported where μ has no mass
        let mu = MeasureSpec::new(
            0.0,
            1.0,
            crate::measure::Density::PiecewiseConstant {
                knots: vec![0.0, 0.5, 1.0],
                values: vec![0.0, 1.0],
            },
            vec![],
        )
        .unwrap();
        let chi = StepFunction::indicator(0.0, 1.0, 0.0, 0.25, 1.0).unwrap();
        assert_eq!(gauge_norm_value(&chi, &YoungFunction::power(2.0), &mu).unwrap(), 0.0);
    }

    #[test]
    fn extended_valued_phi() {
        // Φ = 0 on [0,1]... capped t² with cap 1: ‖c‖ on Lebesgue [0,1] is c (need |f/k| <= 1 and k² >= c²)
        let phi = YoungFunction::capped(&YoungFunction::power(2.0), 1.0).unwrap();
        let c = PiecewiseLinearFunction::constant(0.0, 1.0, 3.0);
        let n = gauge_norm_value(&c, &phi, &leb()).unwrap();
        assert!((n - 3.0).abs() < 1e-10);
    }

    #[test]
    fn orlicz_bracket_examples() {
        let half_sq = YoungFunction::scaled_power(0.5, 2.0);
        let psi = ComplementaryFunction::new(half_sq.clone());
        let f = PiecewiseLinearFunction::constant(0.0, 1.0, 1.0);
        // ‖1‖ with Φ=t²/2 solves 1/(2k²)=1
        let g_norm = (0.5f64).sqrt();
        let g = f.scaled(1.0 / g_norm);
        let b = orlicz_norm_bracket(&f, &half_sq, &psi, &leb(), &[&g], &GaugeConfig::default()).unwrap();
        assert!((b.lower - 1.0 / g_norm).abs() < 1e-6);
        assert!(b.lower <= b.upper);
        assert!((b.gauge - g_norm).abs() < 1e-10);

        let chi = StepFunction::indicator(0.0, 1.0, 0.0, 0.5, 1.0).unwrap();
        let sq = YoungFunction::power(2.0);
        let b = orlicz_norm_bracket(&chi, &sq, &ComplementaryFunction::new(sq.clone()), &leb(), &[], &GaugeConfig::default()).unwrap();
        assert!((b.upper - 2.0 * 0.5f64.sqrt()).abs() < 1e-10);

        let too_big = PiecewiseLinearFunction::constant(0.0, 1.0, 10.0);
        let err = orlicz_norm_bracket(&f, &half_sq, &psi, &leb(), &[&too_big], &GaugeConfig::default()).unwrap_err();
        assert!(matches!(err, Error::DualOutsideBall { index: 0, .. }));
    }

    #[test]
    fn separable_minkowski() {
        let k = FnKernel {
            f: |x: f64, t: f64| x * (t - 0.3),
            breaks: |_t: f64| vec![],
        };
        let t = TNodes::kronrod_pieces(&[0.0, 0.3, 1.0]);
        let sq = YoungFunction::power(2.0);
        let r = minkowski_check(&k, &sq, &leb(), &t, &GaugeConfig::default()).unwrap();
        let g = (1.0f64 / 3.0).sqrt();
        assert!((r.lhs - g * 0.2).abs() < 1e-9);
        assert!((r.rhs - g * (0.3f64.powi(2) / 2.0 + 0.7f64.powi(2) / 2.0)).abs() < 1e-9);
        assert!(r.passed && !r.uses_factor_two_slack);
    }
}
