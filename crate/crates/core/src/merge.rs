//! Lane segment merging and pedestrian crossing orientation unification.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, MapError};
use crate::geometry::{boundary_ring, is_simple_ring, signed_area, Polyline2D};
use crate::map::{build_lane_graph, ElementId, LaneSegment, MapScene};

/// Which lane properties must agree for two consecutive segments to merge.
/// A degree-2 lane graph vertex and coincident endpoints are always required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MergePolicy {
    pub lane_type: bool,
    pub marks: bool,
    pub intersection: bool,
    pub change_status: bool,
    /// Neighbors must be present or absent on the same sides.
    pub neighbor_presence: bool,
    /// Endpoints closer than this are one joint, meters.
    pub joint_tol: f64,
}

impl Default for MergePolicy {
    fn default() -> Self {
        Self {
            lane_type: true,
            marks: true,
            intersection: true,
            change_status: true,
            neighbor_presence: true,
            joint_tol: 1e-6,
        }
    }
}

impl MergePolicy {
    fn compatible(&self, a: &LaneSegment, b: &LaneSegment) -> bool {
        (!self.lane_type || a.lane_type == b.lane_type)
            && (!self.marks
                || (a.left_lane_mark_type == b.left_lane_mark_type
                    && a.right_lane_mark_type == b.right_lane_mark_type))
            && (!self.intersection || a.is_intersection == b.is_intersection)
            && (!self.change_status || a.history.tags() == b.history.tags())
            && (!self.neighbor_presence
                || (a.left_neighbor_id.is_some() == b.left_neighbor_id.is_some()
                    && a.right_neighbor_id.is_some() == b.right_neighbor_id.is_some()))
            && a.geometry
                .polylines()
                .iter()
                .zip(b.geometry.polylines())
                .all(|(p, q)| p.last().dist(q.first()) <= self.joint_tol)
    }
}

/// Consecutive pairs `(a, b)` that may be merged into `a`, in id order.
pub fn mergeable_pairs(scene: &MapScene, policy: &MergePolicy) -> Vec<(ElementId, ElementId)> {
    let graph = build_lane_graph(scene);
    let degrees = graph.degrees();
    let mut out = Vec::new();
    for a in scene.lane_segments.values() {
        let [b] = a.successors[..] else { continue };
        let Some(b) = scene.lane_segments.get(&b) else {
            continue;
        };
        if b.id == a.id || b.predecessors != [a.id] {
            continue;
        }
        let joint = graph.incidence[&a.id].1;
        if degrees[joint.0] == 2 && policy.compatible(a, b) {
            out.push((a.id, b.id));
        }
    }
    out
}

/// Merge `b` into its sole predecessor `a`. The merged segment keeps `a`'s
/// id, neighbors and history; every reference to `b` is rewired to `a`.
/// Returns `None` when the pair is not mergeable.
pub fn merge_pair(
    scene: &MapScene,
    a: ElementId,
    b: ElementId,
    policy: &MergePolicy,
) -> Option<MapScene> {
    if !mergeable_pairs(scene, policy).contains(&(a, b)) {
        return None;
    }
    let mut out = scene.clone();
    absorb(&mut out, a, b, policy.joint_tol);
    Some(out)
}

fn absorb(scene: &mut MapScene, a: ElementId, b: ElementId, joint_tol: f64) {
    let tail = scene.lane_segments.remove(&b).expect("tail present");
    let head = scene.lane_segments.get_mut(&a).expect("head present");
    let cat = |p: &Polyline2D, q: &Polyline2D| p.concat(q, joint_tol);
    head.geometry.left = cat(&head.geometry.left, &tail.geometry.left);
    head.geometry.right = cat(&head.geometry.right, &tail.geometry.right);
    head.geometry.centerline = cat(&head.geometry.centerline, &tail.geometry.centerline);
    head.successors = tail.successors;

    for lane in scene.lane_segments.values_mut() {
        for list in [&mut lane.successors, &mut lane.predecessors] {
            for id in list.iter_mut().filter(|id| **id == b) {
                *id = a;
            }
        }
        for n in [&mut lane.left_neighbor_id, &mut lane.right_neighbor_id] {
            if *n == Some(b) {
                *n = Some(a);
            }
        }
        lane.normalize_links();
    }
}

/// Merge lane segments across unnecessary breakpoints until no pair is
/// mergeable. The fixed point does not depend on merge order because a
/// merged chain always keeps the id of its head.
pub fn merge_elements(scene: &MapScene) -> MapScene {
    merge_elements_with(scene, &MergePolicy::default())
}

pub fn merge_elements_with(scene: &MapScene, policy: &MergePolicy) -> MapScene {
    let mut cur = scene.clone();
    loop {
        let pairs = mergeable_pairs(&cur, policy);
        if pairs.is_empty() {
            return cur;
        }
        // merging keeps other pairs mergeable; a head that was itself
        // absorbed is resolved to the segment that absorbed it
        let mut absorbed: BTreeMap<ElementId, ElementId> = BTreeMap::new();
        for (a, b) in pairs {
            let mut head = a;
            while let Some(&h) = absorbed.get(&head) {
                head = h;
            }
            if head == b {
                // closed loop: the last joint stays
                continue;
            }
            absorb(&mut cur, head, b, policy.joint_tol);
            absorbed.insert(b, head);
        }
    }
}

/// Orient every crossing so that its boundaries run along the centerline,
/// the left boundary lies left of it and the boundary polygon is
/// counterclockwise. Idempotent.
pub fn unify_crossing_orientation(scene: &MapScene) -> Result<MapScene, MapError> {
    let mut out = scene.clone();
    for c in out.pedestrian_crossings.values_mut() {
        let g = &mut c.geometry;
        let dir = g.centerline.last() - g.centerline.first();
        for b in [&mut g.left, &mut g.right] {
            if (b.last() - b.first()).dot(dir) < 0.0 {
                *b = b.reversed();
            }
        }
        let ring = boundary_ring(&g.left, &g.right);
        if !is_simple_ring(&ring) {
            return Err(MapError::Geometry {
                path: format!("$.pedestrian_crossings.{}", c.id),
                source: GeometryError::SelfIntersecting,
            });
        }
        if signed_area(&ring) < 0.0 {
            std::mem::swap(&mut g.left, &mut g.right);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::map::{ChangeTag, ElementGeometry, PedestrianCrossing};

    fn seg(id: i64, x0: f64, x1: f64) -> LaneSegment {
        let line = |y: f64| Polyline2D::new(vec![Point::new(x0, y), Point::new(x1, y)]).unwrap();
        LaneSegment::new(
            ElementId(id),
            ElementGeometry {
                left: line(1.5),
                right: line(-1.5),
                centerline: line(0.0),
            },
        )
    }

    fn chain(n: i64) -> MapScene {
        let mut s = MapScene::new("chain");
        for i in 0..n {
            let mut l = seg(i + 1, 10.0 * i as f64, 10.0 * (i + 1) as f64);
            if i > 0 {
                l.predecessors = vec![ElementId(i)];
            }
            if i + 1 < n {
                l.successors = vec![ElementId(i + 2)];
            }
            s.lane_segments.insert(l.id, l);
        }
        s
    }

    #[test]
    fn chain_collapses_to_one() {
        let m = merge_elements(&chain(3));
        assert_eq!(m.lane_segments.len(), 1);
        let l = &m.lane_segments[&ElementId(1)];
        assert!((l.geometry.centerline.length() - 30.0).abs() < 1e-6);
        assert!(l.successors.is_empty() && l.predecessors.is_empty());
        assert_eq!(merge_elements(&m), m);
    }

    #[test]
    fn closed_loop_terminates() {
        let mut s = chain(3);
        s.lane_segments.get_mut(&ElementId(3)).unwrap().successors = vec![ElementId(1)];
        s.lane_segments.get_mut(&ElementId(1)).unwrap().predecessors = vec![ElementId(3)];
        // the closing joint does not coincide geometrically; the other two merge
        assert_eq!(merge_elements(&s).lane_segments.len(), 1);
    }

    #[test]
    fn change_status_blocks_merge() {
        let mut s = chain(3);
        s.lane_segments
            .get_mut(&ElementId(2))
            .unwrap()
            .history
            .record(ChangeTag::Marking);
        assert_eq!(merge_elements(&s).lane_segments.len(), 3);
    }

    #[test]
    fn fork_is_never_merged() {
        let mut s = chain(2);
        let mut c = seg(3, 10.0, 20.0);
        c.geometry.centerline =
            Polyline2D::new(vec![Point::new(10.0, 0.0), Point::new(20.0, 5.0)]).unwrap();
        c.predecessors = vec![ElementId(1)];
        s.lane_segments.insert(c.id, c);
        s.lane_segments.get_mut(&ElementId(1)).unwrap().successors =
            vec![ElementId(2), ElementId(3)];
        assert!(mergeable_pairs(&s, &MergePolicy::default()).is_empty());
        assert_eq!(merge_elements(&s), s);
    }

    fn crossing(clockwise: bool) -> PedestrianCrossing {
        let line = |y: f64| Polyline2D::new(vec![Point::new(0.0, y), Point::new(8.0, y)]).unwrap();
        let (l, r) = if clockwise { (-2.0, 2.0) } else { (2.0, -2.0) };
        PedestrianCrossing::new(
            ElementId(9),
            ElementGeometry {
                left: line(l),
                right: line(r),
                centerline: line(0.0),
            },
        )
    }

    #[test]
    fn clockwise_crossing_is_flipped() {
        let mut s = MapScene::new("x");
        s.pedestrian_crossings.insert(ElementId(9), crossing(true));
        let ring = s.pedestrian_crossings[&ElementId(9)].geometry.ring();
        assert!(signed_area(&ring) < 0.0);
        let u = unify_crossing_orientation(&s).unwrap();
        let g = &u.pedestrian_crossings[&ElementId(9)].geometry;
        assert!(signed_area(&g.ring()) > 0.0);
        assert_eq!(g, &crossing(false).geometry);
        assert_eq!(unify_crossing_orientation(&u).unwrap(), u);
    }

    #[test]
    fn reversed_boundary_is_aligned() {
        let mut c = crossing(false);
        c.geometry.left = c.geometry.left.reversed();
        let mut s = MapScene::new("x");
        s.pedestrian_crossings.insert(c.id, c);
        let u = unify_crossing_orientation(&s).unwrap();
        assert_eq!(
            u.pedestrian_crossings[&ElementId(9)].geometry,
            crossing(false).geometry
        );
    }
}
