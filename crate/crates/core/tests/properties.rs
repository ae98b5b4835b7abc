use mkc_core::experiments::{cabello_sum_of, run_cabello_single_shot};
use mkc_core::linalg::{
    born_expectation, random_density, random_hermitian, spectral_decomposition, spectrum, tensor, DensityOperator,
    HermitianOperator,
};
use mkc_core::model::{new_catalog, sample_hidden_state, ObservableHandle};
use mkc_core::pom::BoobyBox;
use mkc_core::stats::{draw_categorical, RngKey};
use mkc_core::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectral_decomposition_reconstructs(seed in any::<u64>(), dim in 2usize..=9) {
        let a = random_hermitian(&mut rng(seed), dim);
        let parts = spectral_decomposition(&a);
        let id = HermitianOperator::identity(dim).unwrap();
        let mut sum = id.scale(0.0);
        let mut rebuilt = id.scale(0.0);
        for (i, p) in parts.iter().enumerate() {
            sum = sum.add(&p.projector).unwrap();
            rebuilt = rebuilt.add(&p.projector.scale(p.eigenvalue)).unwrap();
            for q in &parts[i + 1..] {
                prop_assert!(p.projector.matrix().mul(q.projector.matrix()).operator_norm() < 1e-9);
            }
        }
        prop_assert!(sum.matrix().max_abs_diff(id.matrix()) < 1e-9);
        let diff = a.add(&rebuilt.scale(-1.0)).unwrap();
        prop_assert!(diff.matrix().operator_norm() < 1e-9);
        prop_assert!(parts.windows(2).all(|w| w[0].eigenvalue < w[1].eigenvalue));
    }

    #[test]
    fn born_expectation_is_linear(seed in any::<u64>(), s in -3.0f64..3.0, t in -3.0f64..3.0) {
        let mut r = rng(seed);
        let rho = random_density(&mut r, 3);
        let a = random_hermitian(&mut r, 3);
        let b = random_hermitian(&mut r, 3);
        let combo = a.scale(s).add(&b.scale(t)).unwrap();
        let lhs = born_expectation(&rho, &combo).unwrap();
        let rhs = s * born_expectation(&rho, &a).unwrap() + t * born_expectation(&rho, &b).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn tensor_trace_factorizes(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_hermitian(&mut r, 3);
        let b = random_hermitian(&mut r, 3);
        let ab = tensor(&a, &b).unwrap();
        prop_assert!((ab.trace() - a.trace() * b.trace()).abs() < 1e-9);
    }

    #[test]
    fn coloring_respects_functional_relations(
        seed in any::<u64>(),
        coeffs in prop::array::uniform4(-3i32..=3),
    ) {
        let mut r = rng(seed);
        let mut cat = new_catalog(3, 1e-3, seed).unwrap();
        let h = cat.resolve_target(&random_hermitian(&mut r, 3)).unwrap();
        let rho = random_density(&mut r, 3);
        let mut state = sample_hidden_state(&cat, &rho, seed).unwrap();
        let g = |x: f64| coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + f64::from(c));
        let v = state.value_of(&cat, &h).unwrap();
        prop_assert!(h.spectrum().contains(&v));
        prop_assert_eq!(state.value_of(&cat, &h.map(g)).unwrap(), g(v));
    }

    #[test]
    fn catalog_stays_totally_incompatible(seed in any::<u64>(), n in 1usize..8) {
        let mut r = rng(seed);
        let mut cat = new_catalog(3, 1e-2, seed).unwrap();
        for _ in 0..n {
            cat.resolve_target(&random_hermitian(&mut r, 3)).unwrap();
        }
        prop_assert!(cat.is_pairwise_incompatible().unwrap());
    }

    #[test]
    fn resolving_twice_reuses_the_basis(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut cat = new_catalog(4, 1e-3, seed).unwrap();
        let a = random_hermitian(&mut r, 4);
        let first = cat.resolve_target(&a).unwrap();
        let len = cat.len();
        let second = cat.resolve_target(&a).unwrap();
        prop_assert_eq!(first, second);
        prop_assert_eq!(cat.len(), len);
    }

    #[test]
    fn outcomes_do_not_depend_on_query_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut cat = new_catalog(2, 1e-3, seed).unwrap();
        let hs: Vec<ObservableHandle> = (0..4).map(|_| cat.resolve_target(&random_hermitian(&mut r, 2)).unwrap()).collect();
        let rho = DensityOperator::maximally_mixed(2).unwrap();
        let mut forward = sample_hidden_state(&cat, &rho, seed).unwrap();
        let mut backward = forward.clone();
        let a: Vec<f64> = hs.iter().map(|h| forward.value_of(&cat, h).unwrap()).collect();
        let mut b: Vec<f64> = hs.iter().rev().map(|h| backward.value_of(&cat, h).unwrap()).collect();
        b.reverse();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn classical_sums_never_exceed_four(bits in 0u32..512) {
        let a: [i8; 9] = std::array::from_fn(|i| if bits & (1 << i) != 0 { -1 } else { 1 });
        prop_assert!(cabello_sum_of(&a) <= 4);
    }

    #[test]
    fn booby_box_allows_one_compartment(first in 0u8..2, second in 0u8..2, pick in 1u8..=2) {
        let mut b = BoobyBox::new(first, second);
        let v = b.open(pick).unwrap();
        prop_assert_eq!(v, if pick == 1 { first } else { second });
        let is_trap = matches!(b.open(3 - pick), Err(Error::BoobyTrap { .. }));
        prop_assert!(is_trap);
    }

    #[test]
    fn categorical_draws_land_on_support(seed in any::<u64>(), w in prop::collection::vec(0.0f64..1.0, 1..9)) {
        let total: f64 = w.iter().sum();
        prop_assume!(total > 0.0);
        let w: Vec<f64> = w.iter().map(|x| x / total).collect();
        let i = draw_categorical(&RngKey::new(seed, [0; 4]), &w).unwrap();
        prop_assert!(w[i] > 0.0);
    }
}

#[test]
fn spin1_squares_have_binary_spectrum() {
    let mut r = rng(17);
    for _ in 0..10 {
        let v: [f64; 3] = std::array::from_fn(|_| rand::Rng::random_range(&mut r, -1.0..1.0));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let s = mkc_core::linalg::spin1_component(v.map(|x| x / n)).unwrap();
        assert_eq!(spectrum(&s.square()), vec![0.0, 1.0]);
    }
}

#[test]
fn cabello_products_hold_for_random_states() {
    let mut r = rng(23);
    for seed in 0..3 {
        let rho = random_density(&mut r, 4);
        let mut cat = new_catalog(4, 1e-3, seed).unwrap();
        let res = run_cabello_single_shot(&mut cat, &rho, 600, seed).unwrap();
        assert_eq!(res.product_violations, 0);
        assert_eq!(res.cabello_sum, 6.0);
    }
}
