mod common;

use common::{dense_neighborhood_brute, greedy_peel, random_graph, random_subset};
use expanderquorum::overlay::{
    build_regular_expander, check_expansion, dense_neighborhood_exists, eigen_lambda, mixing_check,
    ramanujan_bound, survival_subset, OverlayError, OverlayGraph,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn peeling_matches_greedy_oracle_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let n = rng.gen_range(2..=40);
        let g = random_graph(n, rng.gen_range(0.05..0.6), &mut rng);
        let b = random_subset(n, rng.gen_range(0..=n), &mut rng);
        let delta = rng.gen_range(0.0..5.0);
        assert_eq!(survival_subset(&g, &b, delta), greedy_peel(&g, &b, delta));
    }
}

#[test]
fn dense_neighborhood_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..150 {
        let n = rng.gen_range(2..=10);
        let g = random_graph(n, rng.gen_range(0.2..0.8), &mut rng);
        let alive = random_subset(n, rng.gen_range(1..=n), &mut rng);
        let v = alive[rng.gen_range(0..alive.len())];
        let gamma = rng.gen_range(1..=3);
        let delta = f64::from(rng.gen_range(1..=6)) / 2.0;
        assert_eq!(
            dense_neighborhood_exists(&g, v, gamma, delta, &alive),
            dense_neighborhood_brute(&g, v, gamma, delta, &alive),
            "n={n} v={v} gamma={gamma} delta={delta} alive={alive:?}"
        );
    }
}

#[test]
fn dead_vertex_has_no_neighborhood() {
    let g = OverlayGraph::complete(5);
    assert!(!dense_neighborhood_exists(&g, 0, 2, 1.0, &[1, 2, 3]));
    assert!(dense_neighborhood_exists(&g, 0, 2, 2.0, &[0, 1, 2]));
    assert!(!dense_neighborhood_exists(&g, 0, 2, 3.0, &[0, 1, 2]));
}

#[test]
fn certified_expanders_respect_the_bound() {
    for (n, d, seed) in [(64, 8, 0), (100, 6, 1), (50, 4, 2)] {
        let g = build_regular_expander(n, d, 0.1, seed, 100).unwrap();
        assert!(g.is_regular());
        assert_eq!(g.degree(), d);
        assert!(g.lambda() <= ramanujan_bound(d) * 1.1);
        assert!((eigen_lambda(&g) - g.lambda()).abs() < 1e-9);
        assert_eq!(OverlayGraph::from_text(&g.to_text()).unwrap(), g);
    }
}

#[test]
fn construction_errors() {
    assert!(matches!(build_regular_expander(9, 3, 0.1, 0, 10), Err(OverlayError::ParityError { .. })));
    assert!(build_regular_expander(10, 9, 0.1, 0, 10).unwrap().is_complete());
    assert!(matches!(build_regular_expander(0, 3, 0.1, 0, 10), Err(OverlayError::InvalidParameters(_))));
    let g = OverlayGraph::complete(6);
    assert!(matches!(mixing_check(&g, &[0, 1], &[1, 2]), Err(OverlayError::OverlapError)));
    assert!(matches!(check_expansion(&g, 4, 10, 0), Err(OverlayError::SizeError { .. })));
}

#[test]
fn same_seed_same_graph() {
    let a = build_regular_expander(80, 6, 0.1, 17, 100).unwrap();
    let b = build_regular_expander(80, 6, 0.1, 17, 100).unwrap();
    assert_eq!(a.to_text(), b.to_text());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn survival_subset_is_a_fixed_point(seed in any::<u64>(), n in 2usize..30, delta in 0.0f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, 0.3, &mut rng);
        let b = random_subset(n, rng.gen_range(0..=n), &mut rng);
        let s = survival_subset(&g, &b, delta);
        prop_assert!(s.iter().all(|v| b.contains(v)));
        for &v in &s {
            let k = g.neighbors(v).iter().filter(|w| s.contains(w)).count();
            prop_assert!(k as f64 >= delta);
        }
        // Monotone in delta.
        let looser = survival_subset(&g, &b, delta / 2.0);
        prop_assert!(s.iter().all(|v| looser.contains(v)));
    }

    #[test]
    fn mixing_lemma_holds_on_certified_graphs(seed in any::<u64>(), a in 1usize..20, b in 1usize..20) {
        let g = build_regular_expander(48, 6, 0.1, seed % 8, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picked = random_subset(48, a + b, &mut rng);
        let (x, y) = picked.split_at(a);
        prop_assert!(mixing_check(&g, x, y).unwrap());
    }

    #[test]
    fn text_round_trip(seed in any::<u64>(), n in 2usize..25) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, 0.4, &mut rng);
        prop_assert_eq!(OverlayGraph::from_text(&g.to_text()).unwrap(), g);
    }
}
