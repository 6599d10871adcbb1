//! Canonical-form checks: a change set should be the one unique encoding of
//! an update under the topology-gated insertion rule, the right-hand rule for
//! ambiguous insertions and function-preserving intersection reroutes.

use std::collections::BTreeSet;

use super::diff::{geometry_changed, GEOMETRY_SAMPLES};
use super::{apply_changeset, ChangeKey, ChangeKind, ChangeSet};
use crate::geometry::Polyline2D;
use crate::map::{
    build_lane_graph, ElementId, ElementKind, MapElement, MapScene, Severity, ValidationReport,
    Violation,
};

pub const RULE_REPLACEMENT: &str = "unjustified replacement";
pub const RULE_RIGHT_HAND: &str = "right-hand side rule";
pub const RULE_REROUTE_FUNCTION: &str = "function-preserving reroute";
pub const RULE_REROUTE_LOCATION: &str = "reroute outside intersection";
pub const RULE_EXCLUSIVE: &str = "exclusive insertion/deletion";
pub const RULE_TOPOLOGY_GATE: &str = "insertion/deletion without lane-graph change";
pub const RULE_REPRODUCES: &str = "change set reproduces ground truth";

/// Slack on the ambiguity test of the right-hand rule, metres.
const AMBIGUITY_MARGIN: f64 = 0.5;
const OFFSET_EPS: f64 = 1e-3;
const TURN_THRESHOLD_DEG: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TurnClass {
    Left,
    Straight,
    Right,
}

impl TurnClass {
    fn from_heading_delta(delta: f64) -> Self {
        let deg = delta.to_degrees();
        if deg > TURN_THRESHOLD_DEG {
            TurnClass::Left
        } else if deg < -TURN_THRESHOLD_DEG {
            TurnClass::Right
        } else {
            TurnClass::Straight
        }
    }
}

/// Role of an intersection segment on the road graph: which entry lane it
/// leaves from (0 = rightmost) and which way it turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FunctionSignature {
    pub entry_ordinal: usize,
    pub turn: TurnClass,
}

/// Function signature of lane `id`, or `None` if it has no predecessor.
pub fn function_signature(scene: &MapScene, id: ElementId) -> Option<FunctionSignature> {
    let lane = scene.lane_segments.get(&id)?;
    let entry = *lane.predecessors.iter().min()?;
    let mut ordinal = 0;
    let mut cur = scene.lane_segments.get(&entry)?;
    let mut seen = BTreeSet::from([cur.id]);
    while let Some(next) = cur
        .right_neighbor_id
        .and_then(|r| scene.lane_segments.get(&r))
    {
        if !seen.insert(next.id) {
            break;
        }
        ordinal += 1;
        cur = next;
    }
    Some(FunctionSignature {
        entry_ordinal: ordinal,
        turn: TurnClass::from_heading_delta(lane.geometry.centerline.heading_delta()),
    })
}

fn violation(id: ElementId, rule: &'static str, severity: Severity, message: String) -> Violation {
    Violation {
        element: id,
        rule,
        severity,
        message,
    }
}

/// Mean distance between two centerlines after resampling.
fn centerline_distance(a: &Polyline2D, b: &Polyline2D) -> f64 {
    a.mean_deviation(b, GEOMETRY_SAMPLES)
}

/// Mean signed offset of `line` to the right of `reference`.
fn right_offset(line: &Polyline2D, reference: &Polyline2D) -> f64 {
    let n = GEOMETRY_SAMPLES;
    let (Ok(a), Ok(r)) = (line.resample(n), reference.resample(n)) else {
        return 0.0;
    };
    let len = r.length();
    let mut sum = 0.0;
    for (k, p) in a.points().iter().enumerate() {
        let s = len * k as f64 / (n - 1) as f64;
        let (q, t) = r.point_and_tangent_at(s);
        sum += -t.cross(*p - q);
    }
    sum / n as f64
}

/// Links of an element restricted to elements present in both scenes, plus
/// the number of links to elements that exist on one side only.
fn local_signature(
    e: &MapElement,
    persisting: &BTreeSet<ElementId>,
) -> (Vec<ElementId>, Vec<ElementId>, usize, usize) {
    let MapElement::LaneSegment(l) = e else {
        return (Vec::new(), Vec::new(), 0, 0);
    };
    let split = |ids: &[ElementId]| {
        let kept: Vec<ElementId> = ids
            .iter()
            .copied()
            .filter(|i| persisting.contains(i))
            .collect();
        let other = ids.len() - kept.len();
        (kept, other)
    };
    let (p, pn) = split(&l.predecessors);
    let (s, sn) = split(&l.successors);
    (p, s, pn, sn)
}

/// Report every way in which `cs` deviates from the canonical encoding of
/// the update from `prior` to `gt`. Cases the rules do not cover are
/// reported as warnings.
pub fn validate_canonical(cs: &ChangeSet, prior: &MapScene, gt: &MapScene) -> ValidationReport {
    let mut report = ValidationReport::default();
    let v = &mut report.violations;

    match apply_changeset(prior, cs) {
        Ok(out) => {
            let (a, b) = (out.without_history(), gt.without_history());
            if a != b {
                let id = a
                    .ids()
                    .union(&b.ids())
                    .copied()
                    .find(|&id| a.element(id) != b.element(id))
                    .unwrap_or_default();
                v.push(violation(
                    id,
                    RULE_REPRODUCES,
                    Severity::Error,
                    "applying the change set does not yield the ground truth".into(),
                ));
            }
        }
        Err(e) => v.push(violation(
            ElementId::default(),
            RULE_REPRODUCES,
            Severity::Error,
            format!("change set does not apply: {e}"),
        )),
    }

    let persisting: BTreeSet<ElementId> = prior.ids().intersection(&gt.ids()).copied().collect();
    let deleted: Vec<&MapElement> = cs.deletions().collect();
    let inserted: Vec<&MapElement> = cs.insertions().collect();

    for (id, kind) in cs.iter() {
        if matches!(
            kind,
            ChangeKind::Insertion { .. } | ChangeKind::Deletion { .. }
        ) && cs.keys_for(id).count() > 1
        {
            v.push(violation(
                id,
                RULE_EXCLUSIVE,
                Severity::Error,
                "inserted or deleted element carries further changes".into(),
            ));
        }
    }

    // (a) delete+insert pairs that only re-encode an in-place edit
    for d in &deleted {
        for i in &inserted {
            if d.kind() != i.kind() {
                continue;
            }
            if local_signature(d, &persisting) != local_signature(i, &persisting) {
                continue;
            }
            let dist = centerline_distance(&d.geometry().centerline, &i.geometry().centerline);
            if dist < d.geometry().mean_width() {
                v.push(violation(
                    i.id(),
                    RULE_REPLACEMENT,
                    Severity::Error,
                    format!(
                        "deletion of {} and insertion of {} leave the road graph unchanged; \
                         use in-place edits",
                        d.id(),
                        i.id()
                    ),
                ));
            }
        }
    }

    // (b) right-hand side rule, for insertions and mirrored for deletions
    for i in inserted
        .iter()
        .filter(|e| e.kind() == ElementKind::LaneSegment)
    {
        rhs_check(cs, prior, gt, i, false, v);
    }
    for d in deleted
        .iter()
        .filter(|e| e.kind() == ElementKind::LaneSegment)
    {
        rhs_check(cs, gt, prior, d, true, v);
    }

    // (c) reroutes
    for (id, kind) in cs.iter() {
        let ChangeKind::Geometry { reroute: true, .. } = kind else {
            continue;
        };
        let in_intersection =
            |s: &MapScene| s.lane_segments.get(&id).is_some_and(|l| l.is_intersection);
        if !in_intersection(prior) || !in_intersection(gt) {
            v.push(violation(
                id,
                RULE_REROUTE_LOCATION,
                Severity::Error,
                "reroute flagged on a segment outside an intersection".into(),
            ));
            continue;
        }
        let before = function_signature(prior, id);
        let after = function_signature(gt, id);
        if before.is_none() || before != after {
            v.push(violation(
                id,
                RULE_REROUTE_FUNCTION,
                Severity::Error,
                format!("topological function changes from {before:?} to {after:?}"),
            ));
        }
    }

    // insertions or deletions of lanes that leave the lane graph untouched
    // fall outside the rules above
    let lane_insdel = inserted
        .iter()
        .chain(&deleted)
        .filter(|e| e.kind() == ElementKind::LaneSegment)
        .map(|e| e.id())
        .min();
    if let Some(id) = lane_insdel {
        if build_lane_graph(prior).signature() == build_lane_graph(gt).signature() {
            v.push(violation(
                id,
                RULE_TOPOLOGY_GATE,
                Severity::Warning,
                "lane insertions/deletions present but the lane graph shape is unchanged".into(),
            ));
        }
    }

    report
}

/// Right-hand rule for one inserted element `e` living in `new`. For
/// deletions the roles of the scenes swap (`old` = gt, `new` = prior).
fn rhs_check(
    cs: &ChangeSet,
    old: &MapScene,
    new: &MapScene,
    e: &MapElement,
    mirrored: bool,
    v: &mut Vec<Violation>,
) {
    let MapElement::LaneSegment(lane) = e else {
        return;
    };
    let mut adjacent: BTreeSet<ElementId> = [lane.left_neighbor_id, lane.right_neighbor_id]
        .into_iter()
        .flatten()
        .collect();
    for l in new.lane_segments.values() {
        if l.left_neighbor_id == Some(lane.id) || l.right_neighbor_id == Some(lane.id) {
            adjacent.insert(l.id);
        }
    }
    for g in adjacent {
        let (Some(g_old), Some(g_new)) = (old.lane_segments.get(&g), new.lane_segments.get(&g))
        else {
            continue;
        };
        let is_plain_geometry = matches!(
            cs.get(g, ChangeKey::Geometry),
            Some(ChangeKind::Geometry { reroute: false, .. })
        );
        if !is_plain_geometry || !geometry_changed(&g_old.geometry, &g_new.geometry) {
            continue;
        }
        let reference = &g_old.geometry.centerline;
        let swap = centerline_distance(reference, &lane.geometry.centerline);
        let stay = centerline_distance(reference, &g_new.geometry.centerline);
        if swap > stay + AMBIGUITY_MARGIN {
            continue;
        }
        let offset_e = right_offset(&lane.geometry.centerline, reference);
        let offset_g = right_offset(&g_new.geometry.centerline, reference);
        if offset_g > offset_e + OFFSET_EPS {
            let what = if mirrored { "deletion" } else { "insertion" };
            v.push(violation(
                lane.id,
                RULE_RIGHT_HAND,
                Severity::Error,
                format!(
                    "ambiguous {what} of {} is not the rightmost option; {g} lies further right",
                    lane.id
                ),
            ));
        }
    }
}
