#![allow(dead_code)]

use std::io::Write;

use orliczkit::constants::Triple;
use orliczkit::function::{PiecewiseLinearFunction, RealFunction};
use orliczkit::measure::{Density, MeasureSpec};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Piecewise-constant density plus atoms, kept in plain form so tests can
/// compute masses and L^p integrals exactly.
#[derive(Debug, Clone)]
pub struct RandomMeasure {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub atoms: Vec<(f64, f64)>,
}

impl RandomMeasure {
    pub fn draw(rng: &mut ChaCha8Rng, a: f64, b: f64, cells: usize, atom_prob: f64) -> Self {
        let mut knots: Vec<f64> = (1..cells).map(|_| rng.gen_range(a..b)).collect();
        knots.push(a);
        knots.push(b);
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let values = (1..knots.len()).map(|_| rng.gen_range(0.2..3.0)).collect();
        let mut atoms = Vec::new();
        if rng.gen_bool(atom_prob) {
            atoms.push((rng.gen_range(a..b), rng.gen_range(0.05..0.5)));
        }
        Self { knots, values, atoms }
    }

    pub fn spec(&self) -> MeasureSpec {
        let (a, b) = (self.knots[0], *self.knots.last().unwrap());
        MeasureSpec::new(
            a,
            b,
            Density::PiecewiseConstant {
                knots: self.knots.clone(),
                values: self.values.clone(),
            },
            self.atoms.clone(),
        )
        .unwrap()
    }

    /// μ[lo, hi] (closed interval).
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        let dens: f64 = self
            .knots
            .windows(2)
            .zip(&self.values)
            .map(|(k, v)| v * (k[1].min(hi) - k[0].max(lo)).max(0.0))
            .sum();
        let atoms: f64 = self.atoms.iter().filter(|(x, _)| lo <= *x && *x <= hi).map(|(_, m)| m).sum();
        dens + atoms
    }

    fn density_on(&self, x: f64) -> f64 {
        let i = self.knots.partition_point(|&k| k <= x).saturating_sub(1);
        self.values[i.min(self.values.len() - 1)]
    }

    /// ∫|f|^p dμ in closed form: on each piece f is linear with one sign and
    /// the density is constant.
    pub fn lp_integral(&self, f: &PiecewiseLinearFunction, p: f64) -> f64 {
        let mut pts: Vec<f64> = self.knots.clone();
        pts.extend(f.knots().iter().copied().filter(|x| self.knots[0] < *x && *x < *self.knots.last().unwrap()));
        pts.extend(f.zero_crossings());
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let mut sum = 0.0;
        for w in pts.windows(2) {
            let (x0, x1) = (w[0], w[1]);
            let h = x1 - x0;
            if h <= 0.0 {
                continue;
            }
            let c = self.density_on(0.5 * (x0 + x1));
            let (v0, v1) = (f.eval(x0).abs(), f.eval(x1).abs());
            let piece = if (v1 - v0).abs() <= 1e-14 * v0.max(v1) {
                h * v0.powf(p)
            } else {
                h * (v1.powf(p + 1.0) - v0.powf(p + 1.0)) / ((p + 1.0) * (v1 - v0))
            };
            sum += c * piece;
        }
        sum + self.atoms.iter().map(|&(x, m)| m * f.eval(x).abs().powf(p)).sum::<f64>()
    }
}

/// A random (μ, ν, w) on `[0, 1]`; `w` has no atoms.
pub fn random_triple(rng: &mut ChaCha8Rng) -> (Triple, [RandomMeasure; 3]) {
    let mu = RandomMeasure::draw(rng, 0.0, 1.0, 4, 0.4);
    let nu = RandomMeasure::draw(rng, 0.0, 1.0, 4, 0.4);
    let w = RandomMeasure::draw(rng, 0.0, 1.0, 4, 0.0);
    let t = Triple::new(mu.spec(), nu.spec(), w.spec()).unwrap();
    (t, [mu, nu, w])
}

/// Writes straight to stderr so the line shows up even when the harness
/// captures test output.
pub fn report(line: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

pub fn verdict(id: &str, passed: bool, detail: &str) {
    report(&format!("{} {id}: {detail}", if passed { "PASS" } else { "FAIL" }));
}
