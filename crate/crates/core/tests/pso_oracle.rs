mod common;

use pfml::fixtures;
use pfml::inference::Engine;
use pfml::pso::{decode_parameters, fitness, repair_position, ParameterEncoding, NO_RULE_PENALTY};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn fitness_matches_longhand_mse(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let template = fixtures::expert_controller();
        let enc = ParameterEncoding::for_controller(&template).unwrap();
        let mut x: Vec<f64> = enc.bounds().iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect();
        repair_position(&mut x, &enc);
        let records: Vec<_> = (0..rng.gen_range(1..20)).map(|i| common::random_record(&mut rng, i)).collect();

        let controller = decode_parameters(&x, &template).unwrap();
        let engine = Engine::new(&controller).unwrap();
        let inferred: Vec<Option<f64>> = records
            .iter()
            .map(|r| engine.infer(&r.into()).ok().map(|o| o.crisp_output))
            .collect();
        let desired: Vec<f64> = records.iter().map(|r| r.desired_output).collect();
        let want = common::oracle_mse(&inferred, &desired, NO_RULE_PENALTY);
        let got = fitness(&x, &template, &records).unwrap();
        prop_assert!((got - want).abs() <= 1e-12, "{} vs {}", got, want);
    }
}
