//! Frame-level change labels and the finer sub-labels of atomic changes.

use std::collections::BTreeMap;

use serde::Serialize;

use super::diff::{GEOMETRY_SAMPLES, GEOMETRY_TOLERANCE};
use super::{ChangeKind, ChangeSet};
use crate::map::{ChangeTag, ElementGeometry, LaneType, MapElement, MapScene, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeClass {
    Insertion,
    Deletion,
    Geometry,
    Marking,
    Type,
    Connectivity,
}

impl ChangeClass {
    /// Classes labelled by default.
    pub const DEFAULT: [ChangeClass; 4] = [
        ChangeClass::Insertion,
        ChangeClass::Deletion,
        ChangeClass::Geometry,
        ChangeClass::Marking,
    ];
    pub const ALL: [ChangeClass; 6] = [
        ChangeClass::Insertion,
        ChangeClass::Deletion,
        ChangeClass::Geometry,
        ChangeClass::Marking,
        ChangeClass::Type,
        ChangeClass::Connectivity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChangeClass::Insertion => "insertion",
            ChangeClass::Deletion => "deletion",
            ChangeClass::Geometry => "geometry",
            ChangeClass::Marking => "marking",
            ChangeClass::Type => "type",
            ChangeClass::Connectivity => "connectivity",
        }
    }

    /// Class of a history tag. Reroutes are geometry edits.
    pub fn of_tag(tag: ChangeTag) -> ChangeClass {
        match tag {
            ChangeTag::Geometry | ChangeTag::Reroute => ChangeClass::Geometry,
            ChangeTag::Marking => ChangeClass::Marking,
            ChangeTag::Type => ChangeClass::Type,
            ChangeTag::Connectivity => ChangeClass::Connectivity,
            ChangeTag::Insertion => ChangeClass::Insertion,
            ChangeTag::Deletion => ChangeClass::Deletion,
        }
    }
}

/// Per-class binary label of one frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrameLabels(pub BTreeMap<ChangeClass, bool>);

impl FrameLabels {
    pub fn get(&self, c: ChangeClass) -> bool {
        self.0.get(&c).copied().unwrap_or(false)
    }

    pub fn any(&self) -> bool {
        self.0.values().any(|&v| v)
    }
}

/// `y_c = 1` iff at least one element of the patch carries change class `c`
/// in its history. Deleted elements must be present in the patch tagged
/// `deletion` for the deletion label to fire.
pub fn frame_labels(patch: &MapScene, classes: &[ChangeClass]) -> FrameLabels {
    let mut labels: BTreeMap<ChangeClass, bool> = classes.iter().map(|&c| (c, false)).collect();
    for e in patch.elements() {
        for &tag in &e.history().change_hist {
            if let Some(v) = labels.get_mut(&ChangeClass::of_tag(tag)) {
                *v = true;
            }
        }
    }
    FrameLabels(labels)
}

/// `scene` plus the elements deleted by `cs`, tagged `deletion` and
/// detached from the lane graph, so that deletions show up in frame crops
/// and labels.
pub fn overlay_deletions(scene: &MapScene, cs: &ChangeSet) -> MapScene {
    let mut out = scene.clone();
    for e in cs.deletions() {
        if out.contains(e.id()) {
            continue;
        }
        let mut e = e.without_history();
        if let MapElement::LaneSegment(l) = &mut e {
            l.successors.clear();
            l.predecessors.clear();
            l.left_neighbor_id = None;
            l.right_neighbor_id = None;
        }
        e.history_mut().record(ChangeTag::Deletion);
        out.insert(e);
    }
    out
}

/// Finer annotation below an atomic change kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case", tag = "label", content = "side")]
pub enum SubLabel {
    MarkColor(Side),
    MarkStyle(Side),
    WidthChange(Side),
    BorderShape(Side),
    /// Vehicle lane turned into a restricted lane.
    Restriction,
    /// Restricted lane opened to vehicles.
    Opening,
}

fn half_width(g: &ElementGeometry, side: Side) -> f64 {
    let boundary = match side {
        Side::Left => &g.left,
        Side::Right => &g.right,
    };
    boundary.mean_deviation(&g.centerline, GEOMETRY_SAMPLES)
}

/// Sub-labels of one atomic change. Insertions, deletions and connectivity
/// changes have none.
pub fn sub_labels(kind: &ChangeKind) -> Vec<SubLabel> {
    let mut out = Vec::new();
    match kind {
        ChangeKind::Marking {
            side,
            before,
            after,
        } => {
            if before.color != after.color {
                out.push(SubLabel::MarkColor(*side));
            }
            if before.mark != after.mark {
                out.push(SubLabel::MarkStyle(*side));
            }
        }
        ChangeKind::Geometry { before, after, .. } => {
            for side in [Side::Left, Side::Right] {
                let (b, a) = match side {
                    Side::Left => (&before.left, &after.left),
                    Side::Right => (&before.right, &after.right),
                };
                if (half_width(before, side) - half_width(after, side)).abs() > GEOMETRY_TOLERANCE {
                    out.push(SubLabel::WidthChange(side));
                } else if b.max_deviation(a, GEOMETRY_SAMPLES) > GEOMETRY_TOLERANCE {
                    out.push(SubLabel::BorderShape(side));
                }
            }
        }
        ChangeKind::TypeChange { before, after } => {
            if *before == LaneType::Vehicle {
                out.push(SubLabel::Restriction);
            } else if *after == LaneType::Vehicle {
                out.push(SubLabel::Opening);
            }
        }
        _ => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Polyline2D};
    use crate::map::{ElementId, LaneMarkType, MarkColor, MarkStyle, PedestrianCrossing};

    fn geom(w: f64, dy: f64) -> ElementGeometry {
        let line = |y: f64| {
            Polyline2D::new(vec![Point::new(0.0, y + dy), Point::new(10.0, y + dy)]).unwrap()
        };
        ElementGeometry {
            left: line(w / 2.0),
            right: line(-w / 2.0),
            centerline: line(0.0),
        }
    }

    #[test]
    fn unmodified_patch_has_no_labels() {
        let l = frame_labels(&MapScene::new("s"), &ChangeClass::DEFAULT);
        assert_eq!(l.0.len(), 4);
        assert!(!l.any());
    }

    #[test]
    fn inserted_crossing_sets_only_insertion() {
        let mut s = MapScene::new("s");
        let mut c = PedestrianCrossing::new(ElementId(1), geom(3.0, 0.0));
        c.history.record(ChangeTag::Insertion);
        s.pedestrian_crossings.insert(c.id, c);
        let l = frame_labels(&s, &ChangeClass::DEFAULT);
        assert!(l.get(ChangeClass::Insertion));
        assert!(!l.get(ChangeClass::Deletion));
        assert!(!l.get(ChangeClass::Geometry));
        assert!(!l.get(ChangeClass::Marking));
    }

    #[test]
    fn marking_sub_labels() {
        let k = ChangeKind::Marking {
            side: Side::Left,
            before: LaneMarkType::SOLID_WHITE,
            after: LaneMarkType::new(MarkStyle::Dashed, MarkColor::Yellow),
        };
        assert_eq!(
            sub_labels(&k),
            vec![
                SubLabel::MarkColor(Side::Left),
                SubLabel::MarkStyle(Side::Left)
            ]
        );
    }

    #[test]
    fn geometry_sub_labels_separate_width_from_shift() {
        let widen = ChangeKind::Geometry {
            before: geom(3.0, 0.0),
            after: geom(4.0, 0.0),
            reroute: false,
        };
        assert_eq!(
            sub_labels(&widen),
            vec![
                SubLabel::WidthChange(Side::Left),
                SubLabel::WidthChange(Side::Right)
            ]
        );
        let shift = ChangeKind::Geometry {
            before: geom(3.0, 0.0),
            after: geom(3.0, 1.0),
            reroute: false,
        };
        assert_eq!(
            sub_labels(&shift),
            vec![
                SubLabel::BorderShape(Side::Left),
                SubLabel::BorderShape(Side::Right)
            ]
        );
    }

    #[test]
    fn type_sub_labels() {
        let open = ChangeKind::TypeChange {
            before: LaneType::Bike,
            after: LaneType::Vehicle,
        };
        assert_eq!(sub_labels(&open), vec![SubLabel::Opening]);
    }
}
