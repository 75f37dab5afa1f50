use exact_uncertainty::decomposition::{decomposition_summary, Basis};
use exact_uncertainty::entanglement::correlation_relation;
use exact_uncertainty::mub::mub_construct;
use exact_uncertainty::relations::{verify_ivanovic, verify_position_momentum, Verdict};
use exact_uncertainty::state::{Constants, FiniteState, Grid2, GridPureState, GridSpec, Observable};
use exact_uncertainty::suite;
use exact_uncertainty::Complex64;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn packet() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (-5.0..5.0f64, 0.7..1.5f64, -2.0..2.0f64, -0.3..0.3f64)
}

fn build(ps: &[(f64, f64, f64, f64)], phases: &[f64]) -> GridPureState {
    let grid = GridSpec::centered(512, 64.0).unwrap();
    GridPureState::from_fn(grid, |x| {
        ps.iter()
            .zip(phases)
            .map(|((c, w, k, q), ph)| {
                let u = x - c;
                Complex64::from_polar((-u * u / (4.0 * w * w)).exp(), k * x + q * u * u + ph)
            })
            .sum()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn states_normalize_and_keep_norm_in_momentum(
        ps in prop::collection::vec(packet(), 1..4),
        phases in prop::collection::vec(0.0..std::f64::consts::TAU, 3),
    ) {
        let psi = build(&ps, &phases);
        prop_assert!((psi.norm_sq() - 1.0).abs() < 1e-12);
        let phi = psi.to_momentum(1.0);
        prop_assert!((phi.density().total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn variance_splits_into_classical_and_nonclassical(
        ps in prop::collection::vec(packet(), 1..3),
        phases in prop::collection::vec(0.0..std::f64::consts::TAU, 3),
    ) {
        let psi = build(&ps, &phases);
        let s = decomposition_summary(&psi, Basis::Position, Observable::P, &Constants::default()).unwrap();
        prop_assert!(s.additivity_residual < 1e-8 * s.var_total.max(1.0));
        prop_assert!(s.var_classical >= 0.0);
        prop_assert!(s.var_nonclassical >= -1e-10);
    }

    #[test]
    fn position_momentum_product_respects_heisenberg(
        ps in prop::collection::vec(packet(), 1..3),
        phases in prop::collection::vec(0.0..std::f64::consts::TAU, 3),
        hbar in 0.5..2.0f64,
    ) {
        let psi = build(&ps, &phases);
        let r = verify_position_momentum(&psi, &Constants::with_hbar(hbar), 1e-6).unwrap();
        prop_assert_eq!(r.verdict, Verdict::Equality);
        let product = r.left_value("product").unwrap();
        prop_assert!(product >= hbar / 2.0 * (1.0 - 1e-9));
    }

    #[test]
    fn ivanovic_sum_lies_between_mixed_and_pure_limits(
        seed in any::<u64>(),
        w in 0.0..1.0f64,
        d in 2usize..4,
    ) {
        let a = suite::random_vector(seed, 0, d);
        let b = suite::random_vector(seed, 1, d);
        let rho = DMatrix::from_fn(d, d, |i, j| {
            a[i] * a[j].conj() * w + b[i] * b[j].conj() * (1.0 - w)
        });
        let st = FiniteState::mixed(rho).unwrap();
        let r = verify_ivanovic(&st, &mub_construct(d).unwrap(), 1e-12).unwrap();
        let sum = r.left_value("inverse_sum").unwrap();
        prop_assert!(r.residual < 1e-12);
        prop_assert!(sum <= 2.0 + 1e-12);
        prop_assert!(sum >= (d as f64 + 1.0) / d as f64 - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn correlation_coefficients_are_bounded(index in 0u64..1000) {
        let g = GridSpec::centered(96, 24.0).unwrap();
        let (_, psi) = suite::random_gaussian2(11, index, Grid2::new(g, g)).unwrap();
        let r = correlation_relation(&psi, &Constants::default()).unwrap();
        for v in [r.relation.r_pearson, r.relation.r_fisher, r.position.r_pearson, r.r_pearson_momentum] {
            prop_assert!((-1.0..=1.0).contains(&v), "{v}");
        }
        prop_assert!(r.residual < 1e-6);
    }
}
