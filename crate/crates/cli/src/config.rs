//! JSON run configurations. Every field has a default so that a bare
//! subcommand runs a small reference case; the resolved config is echoed
//! into each report.

use std::path::Path;

use orliczkit::grid::GridSpec;
use orliczkit::measure::MeasureSpec;
use orliczkit::showcase::ExampleConfig;
use orliczkit::young::{CertificateGrid, YoungFunction};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

fn unit_lebesgue() -> MeasureSpec {
    MeasureSpec::lebesgue(0.0, 1.0)
}

fn abs_phi() -> YoungFunction {
    YoungFunction::power(1.0)
}

/// Test function for `norm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionConfig {
    PiecewiseLinear { knots: Vec<f64>, values: Vec<f64> },
    /// `levels[i]` on `[breaks[i], breaks[i+1])`.
    Step { breaks: Vec<f64>, levels: Vec<f64> },
    /// `value` on `[lo, hi]`, zero elsewhere in `[a, b]`.
    Indicator {
        lo: f64,
        hi: f64,
        #[serde(default = "one")]
        value: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormConfig {
    pub function: FunctionConfig,
    pub phi: YoungFunction,
    pub mu: MeasureSpec,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self {
            function: FunctionConfig::PiecewiseLinear {
                knots: vec![0.0, 1.0],
                values: vec![0.0, 1.0],
            },
            phi: YoungFunction::power(2.0),
            mu: unit_lebesgue(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantKind {
    C0,
    K1,
    Forward,
    Backward,
    Classical,
    HardyS,
    HardyT,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauKind {
    Unit,
    NuLeft,
    NuRight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantConfig {
    pub constant: ConstantKind,
    pub mu: MeasureSpec,
    /// Defaults to `mu`.
    pub nu: Option<MeasureSpec>,
    /// Defaults to `mu`.
    pub w: Option<MeasureSpec>,
    pub p: f64,
    /// Classical constant only; defaults to `p`.
    pub q: Option<f64>,
    pub phi: YoungFunction,
    /// Hardy constants only.
    pub tau: TauKind,
    pub grid: GridSpec,
}

impl Default for ConstantConfig {
    fn default() -> Self {
        Self {
            constant: ConstantKind::K1,
            mu: unit_lebesgue(),
            nu: None,
            w: None,
            p: 1.0,
            q: None,
            phi: abs_phi(),
            tau: TauKind::Unit,
            grid: GridSpec::default(),
        }
    }
}

impl ConstantConfig {
    pub fn resolve(mut self) -> Self {
        self.nu.get_or_insert_with(|| self.mu.clone());
        self.w.get_or_insert_with(|| self.mu.clone());
        if self.constant == ConstantKind::Classical {
            self.q.get_or_insert(self.p);
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyConfig {
    pub count: usize,
    pub knot_budget: usize,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self {
            count: 100,
            knot_budget: 8,
        }
    }
}

/// Extremal test functions added to the random family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtremalConfig {
    /// Explicit split points.
    pub alphas: Vec<f64>,
    /// Additional equally spaced interior split points.
    pub alpha_count: usize,
    /// `ε` for the p = 1 family.
    pub eps: f64,
    /// Regularization `w_n = w + 1/n`.
    pub n: f64,
}

impl Default for ExtremalConfig {
    fn default() -> Self {
        Self {
            alphas: Vec::new(),
            alpha_count: 0,
            eps: 1e-3,
            n: orliczkit::verify::DEFAULT_N,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub mu: MeasureSpec,
    pub nu: Option<MeasureSpec>,
    pub w: Option<MeasureSpec>,
    pub p: f64,
    pub phi: YoungFunction,
    pub seed: u64,
    pub family: FamilyConfig,
    pub extremals: ExtremalConfig,
    pub grid: GridSpec,
    /// Compute the backward constant for p > 1.
    pub necessity: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            mu: unit_lebesgue(),
            nu: None,
            w: None,
            p: 1.0,
            phi: abs_phi(),
            seed: 0,
            family: FamilyConfig::default(),
            extremals: ExtremalConfig::default(),
            grid: GridSpec::default(),
            necessity: true,
        }
    }
}

impl VerifyConfig {
    pub fn resolve(mut self) -> Self {
        self.nu.get_or_insert_with(|| self.mu.clone());
        self.w.get_or_insert_with(|| self.mu.clone());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub x_hi: f64,
    pub x_lo: f64,
    pub count: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            x_hi: 1e-1,
            x_lo: 1e-3,
            count: 13,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExampleRunConfig {
    pub example: ExampleConfig,
    pub grid: GridSpec,
    pub sweep: SweepConfig,
}

impl Default for ExampleRunConfig {
    fn default() -> Self {
        Self {
            example: ExampleConfig::default(),
            grid: orliczkit::showcase::example_grid(),
            sweep: SweepConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckYoungConfig {
    pub phi: YoungFunction,
    /// When set, also certify convexity of `Φ(t^{1/p})`.
    pub p: Option<f64>,
    pub grid: CertificateGrid,
}

impl Default for CheckYoungConfig {
    fn default() -> Self {
        Self {
            phi: YoungFunction::logbump(2.0, 1.0),
            p: Some(2.0),
            grid: CertificateGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComplementaryConfig {
    pub phi: YoungFunction,
    pub s: Vec<f64>,
}

impl Default for ComplementaryConfig {
    fn default() -> Self {
        Self {
            phi: YoungFunction::scaled_power(0.5, 2.0),
            s: vec![1.0, 2.0, 4.0],
        }
    }
}

/// Parse `path` (or take the default), reporting the failing field path,
/// line and column.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, String> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        format!(
            "{}: field `{field}` (line {}, column {}): {inner}",
            path.display(),
            inner.line(),
            inner.column()
        )
    })
}
