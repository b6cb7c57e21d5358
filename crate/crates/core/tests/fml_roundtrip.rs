mod common;

use pfml::fixtures;
use pfml::fml::{parse_fml, serialize_fml, validate_controller};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(seed in any::<u64>()) {
        let c = common::random_controller(&mut ChaCha8Rng::seed_from_u64(seed));
        let text = serialize_fml(&c);
        let back = parse_fml(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(serialize_fml(&back), text);
    }
}

#[test]
fn shipped_fixtures_round_trip_and_validate() {
    for xml in [
        fixtures::SINGLE_RULE_CONTROLLER_XML,
        fixtures::EXPERT_CONTROLLER_XML,
    ] {
        let c = parse_fml(xml).unwrap();
        assert!(validate_controller(&c).is_empty());
        assert_eq!(parse_fml(&serialize_fml(&c)).unwrap(), c);
    }
}

#[test]
fn partial_snippet_parses_but_fails_validation() {
    let c = parse_fml(fixtures::KB_RB_SNIPPET_XML).unwrap();
    assert_eq!(c.knowledge_base.len(), 1);
    assert!(!validate_controller(&c).is_empty());
}
