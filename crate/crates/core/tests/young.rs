use orliczkit::young::{
    certify_young, lambda_transform, CertificateGrid, ComplementaryFunction, ConjugateExponent, Young, YoungFunction,
};
use proptest::prelude::*;

fn catalog() -> impl Strategy<Value = YoungFunction> {
    prop_oneof![
        (1.0..5.0f64).prop_map(YoungFunction::power),
        (0.1..10.0f64, 1.0..4.0f64).prop_map(|(s, q)| YoungFunction::scaled_power(s, q)),
        (1.0..4.0f64, 0.1..3.0f64).prop_map(|(p, a)| YoungFunction::logbump(p, a)),
        Just(YoungFunction::exponential()),
    ]
}

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.log10()..hi.log10()).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn young_inequality(phi in catalog(), t in log_uniform(1e-3, 30.0), s in log_uniform(1e-3, 30.0)) {
        let psi = ComplementaryFunction::new(phi.clone()).value(s).unwrap_or(f64::INFINITY);
        prop_assert!(t * s <= phi.eval(t) + psi + 1e-8);
    }

    #[test]
    fn inverse_round_trip(phi in catalog(), u in log_uniform(1e-6, 1e6)) {
        let t = phi.invert(u).unwrap();
        prop_assert!((phi.eval(t) - u).abs() <= 1e-8 * u);
    }

    #[test]
    fn even_and_midpoint_convex(phi in catalog(), s in 0.0..50.0f64, t in 0.0..50.0f64) {
        prop_assert_eq!(phi.eval(-s), phi.eval(s));
        let (fs, ft) = (phi.eval(s), phi.eval(t));
        prop_assume!(fs.is_finite() && ft.is_finite());
        prop_assert!(phi.eval(0.5 * (s + t)) <= 0.5 * (fs + ft) * (1.0 + 1e-12));
    }

    #[test]
    fn complementary_is_even_and_monotone(phi in catalog(), s in 0.0..20.0f64, ds in 0.0..5.0f64) {
        // eval is +inf past the slope of a linear Φ, where value reports UnboundedSup
        let psi = ComplementaryFunction::new(phi);
        let lo = psi.eval(s);
        prop_assert_eq!(psi.eval(-s), lo);
        prop_assert!(psi.eval(s + ds) >= lo * (1.0 - 1e-12));
    }

    #[test]
    fn conjugate_exponents(p in 1.0001..100.0f64) {
        let c = ConjugateExponent::new(p).unwrap();
        prop_assert!((1.0 / c.p + 1.0 / c.p_prime - 1.0).abs() <= 1e-14);
    }
}

#[test]
fn catalog_passes_certificates() {
    let grid = CertificateGrid::default();
    for phi in [
        YoungFunction::power(1.0),
        YoungFunction::power(3.0),
        YoungFunction::logbump(2.0, 1.0),
        YoungFunction::exponential(),
    ] {
        assert!(certify_young(&phi, &grid).passed, "{}", phi.label());
    }
    assert_eq!(ComplementaryFunction::new(YoungFunction::power(2.0)).value(0.0).unwrap(), 0.0);
}

#[test]
fn lambda_of_power_is_square() {
    let (lambda, cert) = lambda_transform(&YoungFunction::power(6.0), 3.0, &CertificateGrid::default()).unwrap();
    assert!(cert.passed);
    for t in [0.1, 1.0, 7.0] {
        assert!((lambda.eval(t) - t * t).abs() <= 1e-12 * t * t);
    }
    assert!(lambda_transform(&YoungFunction::power(1.5), 3.0, &CertificateGrid::default()).is_err());
}
