mod common;

use common::random_triple;
use orliczkit::constants::{
    hardy_s_constant, hardy_t_constant, k1_phi, k_p_phi_backward, k_p_phi_forward, Tau, Triple,
};
use orliczkit::grid::GridSpec;
use orliczkit::measure::MeasureSpec;
use orliczkit::young::{Young, YoungFunction};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ORACLE_POINTS: usize = 10_000;

fn dense_grid() -> impl Iterator<Item = f64> {
    (1..ORACLE_POINTS).map(|i| i as f64 / ORACLE_POINTS as f64)
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 1e-13 * (left + right).abs().max(1e-300) {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, depth - 1) + simpson(f, m, b, fm, frm, fb, right, depth - 1)
}

/// Adaptive Simpson quadrature, independent of the crate's Gauss-Kronrod.
fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, 40)
}

/// Gauge norm of `c χ_A + d χ_B` from the two masses, by bisection.
fn two_term_norm(phi: &dyn Young, c: f64, m1: f64, d: f64, m2: f64) -> f64 {
    let g = |k: f64| phi.eval(c / k) * m1 + phi.eval(d / k) * m2 - 1.0;
    let (mut lo, mut hi) = (1e-9, 1e9);
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn lebesgue_triple() -> Triple {
    Triple::uniform(MeasureSpec::lebesgue(0.0, 1.0)).unwrap()
}

#[test]
fn k1_square_lebesgue_against_grid_oracle() {
    let phi = YoungFunction::power(2.0);
    let oracle = dense_grid()
        .map(|x| two_term_norm(&phi, x, 1.0 - x, -(1.0 - x), x))
        .fold(0.0, f64::max);
    let r = k1_phi(&lebesgue_triple(), &phi, &GridSpec::default()).unwrap();
    assert!((r.value - oracle).abs() <= 1e-6 * oracle, "{} vs {oracle}", r.value);
}

#[test]
fn forward_square_lebesgue_against_scan_oracle() {
    // [Φ⁻¹(m^{-1/2})]^{-2} = m^{1/2} for Φ = t²; p' = 2
    let first = dense_grid()
        .map(|x| (1.0 - x).sqrt() * adaptive(&|t| t * t, 0.0, x).sqrt())
        .fold(0.0, f64::max);
    let second = dense_grid()
        .map(|x| x.sqrt() * adaptive(&|t| (1.0 - t) * (1.0 - t), x, 1.0).sqrt())
        .fold(0.0, f64::max);
    let oracle = first + second;
    let r = k_p_phi_forward(&lebesgue_triple(), 2.0, &YoungFunction::power(2.0), &GridSpec::default()).unwrap();
    assert!((r.value - oracle).abs() <= 1e-6 * oracle, "{} vs {oracle}", r.value);
}

#[test]
fn backward_with_atom_at_a_against_quadrature_oracle() {
    let mu = MeasureSpec::atoms_only(0.0, 1.0, vec![(0.0, 1.0)]).unwrap();
    let leb = MeasureSpec::lebesgue(0.0, 1.0);
    let triple = Triple::new(mu, leb.clone(), leb).unwrap();
    let phi = YoungFunction::power(2.0);
    let grid = GridSpec::default();
    let r = k_p_phi_backward(&triple, 2.0, &phi, &grid).unwrap();
    // μ[x,b] = 0 kills the first sup; μ[a,x] = 1 makes the second factor 1/Φ⁻¹(1)
    assert_eq!(r.terms[0].sup, 0.0);
    let factor = 1.0 / phi.invert(1.0).unwrap();
    let x_min = grid.build(0.0, 1.0, 0).points[0];
    let oracle = factor * adaptive(&|t| (1.0 - t) * (1.0 - t), x_min, 1.0).sqrt();
    assert!((r.value - oracle).abs() <= 1e-8 * oracle, "{} vs {oracle}", r.value);
    for tp in &r.terms[1].trace {
        let expect = factor * ((1.0 - tp.x).powi(3) / 3.0).sqrt();
        assert!((tp.value - expect).abs() <= 1e-9 * expect.max(1e-12));
    }
}

#[test]
fn hardy_s_unit_tau_against_scan_oracle() {
    let leb = MeasureSpec::lebesgue(0.0, 1.0);
    let oracle = dense_grid()
        .map(|x| (1.0 - x).sqrt() * adaptive(&|_| 1.0, 0.0, x).sqrt())
        .fold(0.0, f64::max);
    let r = hardy_s_constant(2.0, &YoungFunction::power(2.0), &leb, &Tau::Unit, &leb, &GridSpec::default()).unwrap();
    assert!((r.value - oracle).abs() <= 1e-6 * oracle, "{} vs {oracle}", r.value);
    assert!((r.value - 0.5).abs() <= 1e-6);
}

#[test]
fn hardy_with_nonintegrable_weight_diverges() {
    let mu = MeasureSpec::lebesgue(0.0, 1.0);
    let w = MeasureSpec::new(0.0, 1.0, orliczkit::measure::Density::Power { exponent: 4.0, scale: 1.0 }, vec![]).unwrap();
    let r = hardy_s_constant(2.0, &YoungFunction::power(2.0), &mu, &Tau::Unit, &w, &GridSpec::default()).unwrap();
    assert_eq!(r.classification, orliczkit::constants::Classification::Diverging);
    assert!(r.value.is_infinite());
}

fn triple_from(seed: u64) -> Triple {
    random_triple(&mut ChaCha8Rng::seed_from_u64(seed)).0
}

fn small_grid() -> GridSpec {
    GridSpec {
        uniform_points: 128,
        geometric_points: 32,
        decades: 4.0,
        ..GridSpec::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn forward_dominates_backward(seed in 0u64..100_000, k in 0usize..3) {
        let (phi, p) = match k {
            0 => (YoungFunction::logbump(2.0, 1.0), 2.0),
            1 => (YoungFunction::logbump(3.0, 1.0), 2.0),
            _ => (YoungFunction::power(3.0), 1.5),
        };
        let t = triple_from(seed);
        let f = k_p_phi_forward(&t, p, &phi, &small_grid()).unwrap();
        let b = k_p_phi_backward(&t, p, &phi, &small_grid()).unwrap();
        prop_assert!(f.value >= b.value - 1e-8 * f.value, "{} < {}", f.value, b.value);
    }

    #[test]
    fn assembly_identity(seed in 0u64..100_000) {
        let t = triple_from(seed);
        let phi = YoungFunction::logbump(2.0, 1.0);
        let grid = small_grid();
        let f = k_p_phi_forward(&t, 2.0, &phi, &grid).unwrap();
        let s = hardy_s_constant(2.0, &phi, &t.mu, &Tau::NuLeft(t.nu.clone()), &t.w, &grid).unwrap();
        let tt = hardy_t_constant(2.0, &phi, &t.mu, &Tau::NuRight(t.nu.clone()), &t.w, &grid).unwrap();
        let assembled = (s.value + tt.value) / t.nu.total_mass();
        prop_assert!((f.value - assembled).abs() <= 1e-12 * f.value);
    }

    #[test]
    fn refinement_never_lowers_the_sup(seed in 0u64..100_000, k in 0usize..3) {
        let phi = match k {
            0 => YoungFunction::power(1.0),
            1 => YoungFunction::power(2.0),
            _ => YoungFunction::logbump(2.0, 1.0),
        };
        let r = k1_phi(&triple_from(seed), &phi, &small_grid()).unwrap();
        for term in &r.terms {
            prop_assert!(term.sup >= term.coarse_sup);
            let trace_max = term.trace.iter().map(|p| p.value).fold(0.0, f64::max);
            prop_assert!(term.sup >= trace_max);
        }
    }
}
