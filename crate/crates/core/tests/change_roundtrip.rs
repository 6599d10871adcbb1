mod common;

use mapchange::change::{
    apply_changeset, changeset_from_json, changeset_to_json, diff_maps, invert_changeset,
    validate_canonical,
};
use mapchange::map::{parse_map, serialize_map, validate_scene};
use mapchange::prior::synthetic::{road_scene, SyntheticConfig};
use mapchange::prior::{perturb_discrete, perturb_rulebased, RuleBasedConfig};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn map_serialization_roundtrips(seed in 0u64..10_000) {
        let (gt, _) = road_scene(&common::synthetic_config(seed), seed);
        let bytes = serialize_map(&gt);
        let back = parse_map(&bytes).unwrap();
        prop_assert_eq!(&back, &gt);
        prop_assert_eq!(serialize_map(&back), bytes);
    }

    #[test]
    fn discrete_prior_diff_apply_and_invert(seed in 0u64..10_000) {
        let (gt, _) = road_scene(&common::synthetic_config(seed), seed);
        let (prior, _) = perturb_discrete(&gt, 0.2, 0.2, 0.5, seed);
        prop_assert!(validate_scene(&prior).is_empty());
        let cs = diff_maps(&prior, &gt).unwrap();
        let restored = apply_changeset(&prior, &cs).unwrap();
        prop_assert_eq!(serialize_map(&restored.without_history()), serialize_map(&gt));

        // the codec keeps the change set intact
        let bytes = changeset_to_json(&cs);
        prop_assert_eq!(changeset_from_json(&bytes).unwrap(), cs.clone());

        // invert brings the prior back and is an involution on diff output
        let inv = invert_changeset(&cs, &prior).unwrap();
        let back = apply_changeset(&restored, &inv).unwrap();
        prop_assert_eq!(serialize_map(&back.without_history()), serialize_map(&prior));
        prop_assert_eq!(invert_changeset(&inv, &restored).unwrap(), cs);
    }

    #[test]
    fn rulebased_prior_is_canonical_and_deterministic(seed in 0u64..10_000) {
        let (gt, poses) = road_scene(&common::synthetic_config(seed), seed);
        let cfg = RuleBasedConfig::default();
        let (prior, cs, log) = perturb_rulebased(&gt, &poses, &cfg, seed).unwrap();
        let (prior2, cs2, log2) = perturb_rulebased(&gt, &poses, &cfg, seed).unwrap();
        prop_assert_eq!(serialize_map(&prior), serialize_map(&prior2));
        prop_assert_eq!(changeset_to_json(&cs), changeset_to_json(&cs2));
        prop_assert_eq!(log, log2);

        prop_assert_eq!(diff_maps(&prior, &gt).unwrap(), cs.clone());
        let report = validate_canonical(&cs, &prior, &gt);
        prop_assert!(!report.has_errors(), "{:?}", report);
    }
}

#[test]
fn diff_is_empty_on_identical_scenes() {
    let (gt, _) = road_scene(&SyntheticConfig::default(), 1);
    assert!(diff_maps(&gt, &gt).unwrap().is_empty());
}

#[test]
fn discrete_prior_is_seed_deterministic() {
    let (gt, _) = road_scene(&SyntheticConfig::default(), 2);
    let a = perturb_discrete(&gt, 0.2, 0.2, 0.5, 9);
    let b = perturb_discrete(&gt, 0.2, 0.2, 0.5, 9);
    assert_eq!(serialize_map(&a.0), serialize_map(&b.0));
    assert_eq!(changeset_to_json(&a.1), changeset_to_json(&b.1));
    let c = perturb_discrete(&gt, 0.2, 0.2, 0.5, 10);
    assert_ne!(serialize_map(&a.0), serialize_map(&c.0));
}
