mod common;

use mapchange::change::{
    apply_changeset, diff_maps, validate_canonical, ChangeKind, RULE_REPLACEMENT, RULE_RIGHT_HAND,
};
use mapchange::map::serialize_map;

#[test]
fn widening_top_path_is_the_only_canonical_one() {
    let w = common::widening();
    let top = diff_maps(&w.prior, &w.top).unwrap();
    let report = validate_canonical(&top, &w.prior, &w.top);
    assert!(!report.has_errors(), "{report:?}");

    let central = diff_maps(&w.prior, &w.central).unwrap();
    let report = validate_canonical(&central, &w.prior, &w.central);
    assert!(report.rule_count(RULE_RIGHT_HAND) > 0, "{report:?}");

    let bottom = diff_maps(&w.prior, &w.bottom).unwrap();
    let report = validate_canonical(&bottom, &w.prior, &w.bottom);
    assert!(report.rule_count(RULE_REPLACEMENT) > 0, "{report:?}");
}

#[test]
fn every_widening_path_still_reproduces_its_target() {
    let w = common::widening();
    for gt in [&w.top, &w.central, &w.bottom] {
        let cs = diff_maps(&w.prior, gt).unwrap();
        let got = apply_changeset(&w.prior, &cs).unwrap();
        assert_eq!(serialize_map(&got.without_history()), serialize_map(gt));
    }
}

#[test]
fn opened_bike_lane_is_type_geometry_and_marking() {
    let b = common::bike_opening();
    let cs = diff_maps(&b.prior, &b.gt).unwrap();
    assert_eq!(cs.insertions().count(), 0);
    assert_eq!(cs.deletions().count(), 0);
    let names: std::collections::BTreeSet<_> = cs.iter().map(|(_, k)| k.name()).collect();
    for expected in ["type", "geometry", "marking"] {
        assert!(names.contains(expected), "{names:?}");
    }
    assert!(cs.iter().all(|(_, k)| !matches!(
        k,
        ChangeKind::Insertion { .. } | ChangeKind::Deletion { .. }
    )));
    assert!(!validate_canonical(&cs, &b.prior, &b.gt).has_errors());

    let replaced = diff_maps(&b.prior, &b.replaced).unwrap();
    let report = validate_canonical(&replaced, &b.prior, &b.replaced);
    assert!(report.rule_count(RULE_REPLACEMENT) > 0, "{report:?}");
}
