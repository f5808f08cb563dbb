//! Property suites: generator invariants, hidden-edge invariance, I/O round
//! trips, seed determinism and incremental log-joint tracking.

mod common;

use proptest::prelude::*;

use hyperrecon::generators::random_hypergraph;
use hyperrecon::model::ModelKind;
use hyperrecon::rng::rng_from_seed;
use hyperrecon::ObservationMatrix;

use common::props::*;

fn check(result: Check) -> Result<(), TestCaseError> {
    result.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn best_case_has_no_two_edge_in_a_triangle(
        n in 5usize..60,
        p in 0.0f64..0.01,
        q in 0.0f64..0.2,
        seed in any::<u64>(),
    ) {
        check(best_case_scan(n, p, q, seed))?;
    }

    #[test]
    fn worst_case_has_every_two_edge_in_a_triangle(
        cliques in 1usize..25,
        size in 3usize..7,
        promote in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        check(worst_case_scan(cliques, size, promote, seed))?;
    }

    #[test]
    fn hidden_edges_leave_labels_and_likelihood_unchanged(n in 3usize..25, seed in any::<u64>()) {
        check(hidden_edge_invariance(n, seed))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn hypergraph_text_round_trip(
        n in 1usize..30,
        p in 0.0f64..0.05,
        q in 0.0f64..0.3,
        seed in any::<u64>(),
    ) {
        let h = random_hypergraph(n, p, q, &mut rng_from_seed(seed)).unwrap();
        check(hypergraph_round_trip(&h))?;
    }

    #[test]
    fn observation_text_round_trip(
        counts in (2usize..20).prop_flat_map(|n| {
            (Just(n), prop::collection::vec(prop_oneof![3 => Just(0u64), 1 => any::<u64>(), 2 => 0u64..100], n * (n - 1) / 2))
        }),
    ) {
        let (n, dense) = counts;
        let x = ObservationMatrix::from_dense(n, dense).unwrap();
        check(observations_round_trip(&x))?;
    }

    #[test]
    fn experiment_spec_json_round_trip(seed in any::<u64>()) {
        check(json_round_trip(seed))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn stochastic_operations_are_seed_deterministic(seed in any::<u64>()) {
        check(seed_determinism(seed))?;
    }
}

#[test]
fn incremental_log_joint_matches_recomputation() {
    for (model, seed) in [(ModelKind::Hypergraph, 11), (ModelKind::Categorical, 12)] {
        incremental_log_joint(model, 25, 1000, seed).unwrap();
    }
}
