use std::collections::HashSet;

use mupir_core::adversary::{infer_single_user, SingletonCatalog};
use mupir_core::privacylab::{expected_shape, shape_symmetry_check};
use mupir_core::simnet::{run_retrieval_with_plan, RoutingPolicy};
use mupir_core::{
    block_length, canonical_shape, capacity, decode, evaluate_answers, generate_plan, rate_of, MessageSet,
    SystemConfig,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (1usize..=4, 1usize..=5).prop_flat_map(|(k, s)| (Just(k), Just(s), 0..k, any::<u64>()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decode_recovers_desired_message((k, s, theta, seed) in instance()) {
        let config = SystemConfig::single_database(k, s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plan = generate_plan(&config, theta, &mut rng).unwrap();
        let messages = MessageSet::random(k, plan.block_length(), &mut rng);
        let sheets: Vec<_> = plan
            .query_sets()
            .iter()
            .enumerate()
            .map(|(src, set)| evaluate_answers(&messages, src, set).unwrap())
            .collect();
        prop_assert_eq!(&decode(&plan, &sheets).unwrap(), messages.message(theta).unwrap());
    }

    #[test]
    fn plans_meet_capacity_and_validate((k, s, theta, seed) in instance()) {
        let config = SystemConfig::single_database(k, s).unwrap();
        let plan = generate_plan(&config, theta, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        plan.validate().unwrap();
        let l = block_length(s, k).unwrap() as u64;
        prop_assert_eq!(rate_of(l, plan.downloaded_bits() as u64).unwrap(), capacity(s, k));
        prop_assert!(shape_symmetry_check(&plan));
    }

    #[test]
    fn desired_positions_are_never_reused((k, s, theta, seed) in instance()) {
        let config = SystemConfig::single_database(k, s).unwrap();
        let plan = generate_plan(&config, theta, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let mut seen = HashSet::new();
        for e in plan.query_sets().iter().flatten() {
            if let Some(t) = e.term_for(theta) {
                prop_assert!(seen.insert(t.position));
            }
        }
        prop_assert_eq!(seen.len(), plan.block_length());
    }

    #[test]
    fn shape_is_independent_of_source_theta_and_seed((k, s, theta, seed) in instance()) {
        let config = SystemConfig::single_database(k, s).unwrap();
        let plan = generate_plan(&config, theta, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let expected = expected_shape(k, s);
        for set in plan.query_sets() {
            prop_assert_eq!(&canonical_shape(set), &expected);
        }
    }

    #[test]
    fn lone_sets_give_the_attacker_nothing((k, s, theta, seed) in instance()) {
        let config = SystemConfig::single_database(k, s).unwrap();
        let plan = generate_plan(&config, theta, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let catalog = SingletonCatalog::for_config(&config).unwrap();
        for set in plan.query_sets() {
            let r = infer_single_user(set, &catalog).unwrap();
            prop_assert!(r.beta.iter().all(|&b| b == 1), "{:?}", r.beta);
        }
    }
}

#[test]
fn helper_routing_never_changes_the_outcome() {
    let config = SystemConfig::new(3, 2, 3).unwrap();
    let l = block_length(config.sources(), 3).unwrap();
    let messages = MessageSet::random(3, l, &mut ChaCha8Rng::seed_from_u64(0));
    for seed in 0..25 {
        let (plan, t) = run_retrieval_with_plan(&config, 2, &messages, seed, &RoutingPolicy::Uniform).unwrap();
        assert_eq!(t.recovered(), messages.message(2).unwrap());
        assert_eq!(t.downloaded_bits(), plan.downloaded_bits());
        let helpers_direct: usize = t.deliveries().iter().map(|d| d.len()).sum();
        assert_eq!(helpers_direct, config.sources());
    }
}
