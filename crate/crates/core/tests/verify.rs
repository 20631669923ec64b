mod common;

use common::random_triple;
use orliczkit::constants::{k1_supremand, Triple};
use orliczkit::function::RealFunction;
use orliczkit::measure::MeasureSpec;
use orliczkit::verify::{
    certify_instance, extremal_p, extremal_p1, extremal_p1_limit, random_family, random_test_functions,
    test_function_ratio, CertifyOptions, PoincareInstance,
};
use orliczkit::young::YoungFunction;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lebesgue_instance(p: f64, phi: YoungFunction) -> PoincareInstance {
    let leb = MeasureSpec::lebesgue(0.0, 1.0);
    PoincareInstance::new(leb.clone(), leb.clone(), leb, p, phi).unwrap()
}

#[test]
fn f_eps_near_supremand_on_lebesgue() {
    let inst = lebesgue_instance(1.0, YoungFunction::power(1.0));
    let tf = extremal_p1(&inst, 0.5, 1e-3, 1e6).unwrap();
    let ratio = test_function_ratio(&inst, &tf).unwrap().ratio;
    let sup = k1_supremand(&inst.triple(), &inst.phi, 0.5).unwrap();
    assert!((ratio - sup).abs() <= 0.05 * sup, "{ratio} vs {sup}");
}

#[test]
fn f_eps_converges_as_eps_halves() {
    let (triple, _) = random_triple(&mut ChaCha8Rng::seed_from_u64(21));
    let inst = PoincareInstance::new(triple.mu, triple.nu, triple.w, 1.0, YoungFunction::logbump(2.0, 1.0)).unwrap();
    let mut alpha = 0.5;
    let mut bad: Vec<f64> = inst.w.breakpoints();
    bad.extend(inst.mu.atoms().iter().chain(inst.nu.atoms()).map(|a| a.0));
    while bad.iter().any(|b| (b - alpha).abs() < 2e-2) {
        alpha += 0.013;
    }
    let ratios: Vec<f64> = (0..6)
        .map(|k| {
            let eps = 1e-2 / 2f64.powi(k);
            test_function_ratio(&inst, &extremal_p1(&inst, alpha, eps, 1e9).unwrap()).unwrap().ratio
        })
        .collect();
    let (prev, last) = (ratios[ratios.len() - 2], ratios[ratios.len() - 1]);
    assert!((last - prev).abs() <= 0.02 * last, "{ratios:?}");
    let limit = extremal_p1_limit(&inst, alpha, 1e9).unwrap().ratio;
    assert!((last - limit).abs() <= 0.01 * limit, "{last} vs {limit}");
}

#[test]
fn f1_with_atom_at_a_is_linear() {
    let nu = MeasureSpec::atoms_only(0.0, 1.0, vec![(0.0, 1.0)]).unwrap();
    let leb = MeasureSpec::lebesgue(0.0, 1.0);
    let n = 1e3;
    let inst = PoincareInstance::new(leb.clone(), nu, leb, 2.0, YoungFunction::power(2.0)).unwrap();
    let (f1, _) = extremal_p(&inst, 0.4, n).unwrap();
    // ν[a,t] = 1, so f₁' = w_n^{1-p'} = (1 + 1/n)^{-1} on [a, α]
    let slope = 1.0 / (1.0 + 1.0 / n);
    for x in [0.0f64, 0.1, 0.25, 0.4, 0.7, 1.0] {
        let expect = slope * x.min(0.4);
        assert!((f1.shape.eval(x) - expect).abs() <= 1e-12, "{x}: {}", f1.shape.eval(x));
    }
    let r = test_function_ratio(&inst, &f1).unwrap();
    assert!(r.lower_bound.unwrap() <= r.ratio + r.tolerance());
}

#[test]
fn lebesgue_p1_family_below_one() {
    let inst = lebesgue_instance(1.0, YoungFunction::power(1.0));
    let family = random_test_functions(0, 100, 8, 0.0, 1.0).unwrap();
    let rep = certify_instance(&inst, &family, &CertifyOptions::default()).unwrap();
    assert!((rep.bound - 1.0).abs() <= 1e-9);
    assert!(rep.records.iter().all(|r| r.ratio <= 1.0 + 1e-6));
}

#[test]
fn square_phi_extremals_sit_between_bounds() {
    let inst = lebesgue_instance(2.0, YoungFunction::power(2.0));
    let mut family = Vec::new();
    for i in 1..10 {
        let (f1, f2) = extremal_p(&inst, i as f64 / 10.0, 1e9).unwrap();
        family.push(f1);
        family.push(f2);
    }
    let rep = certify_instance(&inst, &family, &CertifyOptions::default()).unwrap();
    assert!(rep.lower_bound_consistent);
    assert!(rep.max_lower_bound.unwrap() <= rep.empirical_c + 1e-6);
    assert!(rep.empirical_c <= rep.bound);
    let backward = rep.necessity_constant.as_ref().unwrap().value;
    assert!(backward / 2.0 <= rep.bound);
}

#[test]
fn single_piece_budget_gives_affine_functions() {
    for (_, f) in random_family(3, 20, 1, 0.0, 1.0).unwrap() {
        assert_eq!(f.knots().len(), 2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn extremal_lower_bounds_hold(seed in 0u64..100_000, alpha in 0.05..0.95f64) {
        let (Triple { mu, nu, w }, _) = random_triple(&mut ChaCha8Rng::seed_from_u64(seed));
        let inst = PoincareInstance::new(mu, nu, w, 2.0, YoungFunction::logbump(2.0, 1.0)).unwrap();
        let (f1, f2) = extremal_p(&inst, alpha, 1e9).unwrap();
        for tf in [f1, f2] {
            let r = test_function_ratio(&inst, &tf).unwrap();
            prop_assert!(r.lower_bound.unwrap() <= r.ratio + r.tolerance(), "{:?}", r);
        }
    }

    #[test]
    fn family_is_deterministic(seed in any::<u64>(), count in 1usize..20, budget in 1usize..10) {
        let a = random_family(seed, count, budget, -1.0, 2.0).unwrap();
        let b = random_family(seed, count, budget, -1.0, 2.0).unwrap();
        prop_assert_eq!(a, b);
    }
}
