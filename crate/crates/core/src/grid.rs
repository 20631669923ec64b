//! Scan grids approximating `sup_{a<x<b}`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridPolicy {
    Uniform,
    GeometricA,
    GeometricB,
    Union,
}

impl std::str::FromStr for GridPolicy {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(GridPolicy::Uniform),
            "geometric-a" => Ok(GridPolicy::GeometricA),
            "geometric-b" => Ok(GridPolicy::GeometricB),
            "union" => Ok(GridPolicy::Union),
            other => invalid(format!("unknown grid policy `{other}` (uniform|geometric-a|geometric-b|union)")),
        }
    }
}

/// Grid recipe. Level `l` doubles every point count `l` times; doubled grids
/// contain the coarser ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub policy: GridPolicy,
    pub uniform_points: usize,
    pub geometric_points: usize,
    /// Geometric grids reach `(b - a) 10^{-decades}` from their endpoint.
    pub decades: f64,
    /// Extra points inserted around the running argmax.
    pub refine_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            policy: GridPolicy::Union,
            uniform_points: 512,
            geometric_points: 64,
            decades: 6.0,
            refine_points: 16,
        }
    }
}

/// Points of one grid level, with the endpoint subgrids kept separately for
/// the divergence test (ordered toward their endpoint).
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    pub points: Vec<f64>,
    pub toward_a: Vec<f64>,
    pub toward_b: Vec<f64>,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let uses_uniform = matches!(self.policy, GridPolicy::Uniform | GridPolicy::Union);
        let uses_geometric = !matches!(self.policy, GridPolicy::Uniform);
        if uses_uniform && self.uniform_points == 0 {
            return invalid("uniform grid needs at least one point");
        }
        if uses_geometric && (self.geometric_points == 0 || !(self.decades > 0.0 && self.decades < 300.0)) {
            return invalid("geometric grid needs points >= 1 and 0 < decades < 300");
        }
        Ok(())
    }

    pub fn build(&self, a: f64, b: f64, level: u32) -> ScanGrid {
        let scale = 1usize << level;
        let len = b - a;
        let mut points = Vec::new();
        let mut toward_a = Vec::new();
        let mut toward_b = Vec::new();
        if matches!(self.policy, GridPolicy::Uniform | GridPolicy::Union) {
            // n points at a + len*i/(n+1); doubling to 2n+1 keeps the old ones
            let n = (self.uniform_points + 1) * scale - 1;
            points.extend((1..=n).map(|i| a + len * i as f64 / (n + 1) as f64));
        }
        let geo = |k: usize, n: usize| len * 10f64.powf(-self.decades * k as f64 / n as f64);
        if matches!(self.policy, GridPolicy::GeometricA | GridPolicy::Union) {
            let n = self.geometric_points * scale;
            toward_a = (1..=n).map(|k| a + geo(k, n)).filter(|&x| a < x && x < b).collect();
        }
        if matches!(self.policy, GridPolicy::GeometricB | GridPolicy::Union) {
            let n = self.geometric_points * scale;
            toward_b = (1..=n).map(|k| b - geo(k, n)).filter(|&x| a < x && x < b).collect();
        }
        points.extend(toward_a.iter().copied());
        points.extend(toward_b.iter().copied());
        points.sort_by(f64::total_cmp);
        points.dedup();
        ScanGrid {
            points,
            toward_a,
            toward_b,
        }
    }
}

/// `count` points strictly between `lo` and `hi`.
pub fn refinement(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|i| lo + (hi - lo) * i as f64 / (count + 1) as f64)
        .filter(|&x| lo < x && x < hi)
        .collect()
}

/// Sorted union without duplicates, restricted to `(a, b)`.
pub fn merge_points(a: f64, b: f64, sets: &[&[f64]]) -> Vec<f64> {
    let mut out: Vec<f64> = sets.iter().flat_map(|s| s.iter().copied()).filter(|&x| a < x && x < b).collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}
