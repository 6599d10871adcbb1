//! Ego-centred square patches.

use std::collections::BTreeSet;

use super::{EgoPose, ElementGeometry, ElementId, MapScene};
use crate::geometry::{Point, Polyline2D, VERTEX_EPS};

pub const DEFAULT_PATCH_EXTENT: f64 = 50.0;

/// A cropped scene expressed in the ego frame of `pose`.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub pose: EgoPose,
    pub extent: f64,
    pub scene: MapScene,
}

/// Crop `scene` to the `extent` x `extent` square centred on `pose`, axes
/// aligned with the vehicle heading.
///
/// Every polyline is clipped at the square, inserting the exact crossing
/// point; when a polyline leaves and re-enters, its longest inside run is
/// kept. An element survives only if all three of its polylines keep a run.
/// References to dropped elements are removed.
pub fn crop_patch(scene: &MapScene, pose: &EgoPose, extent: f64) -> Patch {
    assert!(extent > 0.0, "patch extent must be positive");
    let half = extent / 2.0;
    let clip = |g: &ElementGeometry| -> Option<ElementGeometry> {
        Some(ElementGeometry {
            left: clip_polyline(&g.left, pose, half)?,
            right: clip_polyline(&g.right, pose, half)?,
            centerline: clip_polyline(&g.centerline, pose, half)?,
        })
    };

    let mut out = MapScene {
        scene_id: scene.scene_id.clone(),
        extra: scene.extra.clone(),
        ..Default::default()
    };
    for (id, lane) in &scene.lane_segments {
        if let Some(geometry) = clip(&lane.geometry) {
            let mut l = lane.clone();
            l.geometry = geometry;
            out.lane_segments.insert(*id, l);
        }
    }
    for (id, c) in &scene.pedestrian_crossings {
        if let Some(geometry) = clip(&c.geometry) {
            let mut c = c.clone();
            c.geometry = geometry;
            out.pedestrian_crossings.insert(*id, c);
        }
    }

    let kept: BTreeSet<ElementId> = out.lane_segments.keys().copied().collect();
    for l in out.lane_segments.values_mut() {
        l.successors.retain(|id| kept.contains(id));
        l.predecessors.retain(|id| kept.contains(id));
        l.left_neighbor_id = l.left_neighbor_id.filter(|id| kept.contains(id));
        l.right_neighbor_id = l.right_neighbor_id.filter(|id| kept.contains(id));
    }
    Patch {
        pose: *pose,
        extent,
        scene: out,
    }
}

/// Parametric range of segment a->b inside the box, if any (Liang-Barsky).
fn clip_segment(a: Point, b: Point, half: f64) -> Option<(f64, f64)> {
    let d = b - a;
    let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
    for (p, q) in [
        (-d.x, a.x + half),
        (d.x, half - a.x),
        (-d.y, a.y + half),
        (d.y, half - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

fn clamp_box(p: Point, half: f64) -> Point {
    Point::new(p.x.clamp(-half, half), p.y.clamp(-half, half))
}

fn clip_polyline(line: &Polyline2D, pose: &EgoPose, half: f64) -> Option<Polyline2D> {
    let pts: Vec<Point> = line.points().iter().map(|&p| pose.to_ego(p)).collect();
    let mut runs: Vec<Vec<Point>> = Vec::new();
    let mut open = false;
    for w in pts.windows(2) {
        let Some((t0, t1)) = clip_segment(w[0], w[1], half) else {
            open = false;
            continue;
        };
        let start = if t0 == 0.0 {
            w[0]
        } else {
            clamp_box(w[0].lerp(w[1], t0), half)
        };
        let end = if t1 == 1.0 {
            w[1]
        } else {
            clamp_box(w[0].lerp(w[1], t1), half)
        };
        if !(open && t0 == 0.0) {
            runs.push(vec![start]);
        }
        let run = runs.last_mut().unwrap();
        if run.last().unwrap().dist(end) > VERTEX_EPS {
            run.push(end);
        }
        open = t1 == 1.0;
    }
    runs.into_iter()
        .filter_map(|r| Polyline2D::from_points_dedup(r).ok())
        .max_by(|a, b| a.length().total_cmp(&b.length()))
}
