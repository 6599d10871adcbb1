//! Seeded synthetic ground-truth scenes: a multi-lane road leading into an
//! intersection with straight, right-turn and left-turn connectors, exit
//! lanes and pedestrian crossings, plus an ego trajectory along the
//! rightmost lane.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::seeded;
use crate::geometry::{Point, Polyline2D};
use crate::map::{
    EgoPose, ElementGeometry, ElementId, LaneMarkType, LaneSegment, MapScene, MarkColor, MarkStyle,
    PedestrianCrossing,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    /// Lanes in the driving direction.
    pub lanes: usize,
    /// Road segments per lane before the intersection.
    pub segments: usize,
    pub segment_length: f64,
    pub lane_width: f64,
    /// Amplitude of the lateral road undulation, metres.
    pub curvature: f64,
    pub crossings: bool,
    pub turns: bool,
    /// Vertices per polyline on straight and gently curved segments.
    pub vertices: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            lanes: 3,
            segments: 6,
            segment_length: 12.0,
            lane_width: 3.5,
            curvature: 2.0,
            crossings: true,
            turns: true,
            vertices: 4,
        }
    }
}

struct Builder {
    scene: MapScene,
    next: i64,
}

impl Builder {
    fn id(&mut self) -> ElementId {
        self.next += 1;
        ElementId(self.next)
    }

    fn lane(&mut self, left: Vec<Point>, right: Vec<Point>, center: Vec<Point>) -> ElementId {
        let id = self.id();
        let g = ElementGeometry {
            left: Polyline2D::new(left).expect("synthetic boundary"),
            right: Polyline2D::new(right).expect("synthetic boundary"),
            centerline: Polyline2D::new(center).expect("synthetic centerline"),
        };
        self.scene.lane_segments.insert(id, LaneSegment::new(id, g));
        id
    }

    fn link(&mut self, a: ElementId, b: ElementId) {
        self.scene
            .lane_segments
            .get_mut(&a)
            .unwrap()
            .successors
            .push(b);
        self.scene
            .lane_segments
            .get_mut(&b)
            .unwrap()
            .predecessors
            .push(a);
    }

    fn lane_mut(&mut self, id: ElementId) -> &mut LaneSegment {
        self.scene.lane_segments.get_mut(&id).unwrap()
    }
}

fn arc(center: Point, radius: f64, from: f64, to: f64, n: usize) -> Vec<Point> {
    (0..n)
        .map(|k| {
            let a = from + (to - from) * k as f64 / (n - 1) as f64;
            center + Point::new(a.cos(), a.sin()) * radius
        })
        .collect()
}

/// Build a scene and an ego trajectory. The scene is quantized to the
/// serializer's millimetre grid, ids start at 1.
pub fn road_scene(cfg: &SyntheticConfig, seed: u64) -> (MapScene, Vec<EgoPose>) {
    let mut rng = seeded(seed);
    let k = cfg.lanes.max(1);
    let nv = cfg.vertices.max(2);
    let w = cfg.lane_width + rng.random_range(-0.3..0.3);
    let amp = cfg.curvature * rng.random_range(0.0..1.0);
    let wavelength = rng.random_range(30.0..60.0);
    let phase = rng.random_range(0.0..2.0 * PI);
    let f = |x: f64| amp * (x / wavelength + phase).sin();

    // segment breakpoints along x
    let mut xs = vec![0.0];
    for _ in 0..cfg.segments.max(1) {
        let len = cfg.segment_length * rng.random_range(0.7..1.3);
        xs.push(xs.last().unwrap() + len);
    }
    let x_end = *xs.last().unwrap();

    let interior: Vec<LaneMarkType> = (0..k.saturating_sub(1))
        .map(|_| match rng.random_range(0..20) {
            0..=4 => LaneMarkType::NONE,
            5..=7 => LaneMarkType::SOLID_WHITE,
            _ => LaneMarkType::DASHED_WHITE,
        })
        .collect();
    let left_edge = LaneMarkType::new(MarkStyle::DoubleSolid, MarkColor::Yellow);
    let mark_left = |j: usize| if j + 1 == k { left_edge } else { interior[j] };
    let mark_right = |j: usize| {
        if j == 0 {
            LaneMarkType::SOLID_WHITE
        } else {
            interior[j - 1]
        }
    };

    let mut b = Builder {
        scene: MapScene::new(format!("synthetic-{seed:016x}")),
        next: 0,
    };

    let sample = |x0: f64, x1: f64, off: f64| -> Vec<Point> {
        (0..nv)
            .map(|i| {
                let x = x0 + (x1 - x0) * i as f64 / (nv - 1) as f64;
                Point::new(x, f(x) + off)
            })
            .collect()
    };

    // approach road
    let mut road: Vec<Vec<ElementId>> = vec![Vec::new(); k];
    for i in 0..xs.len() - 1 {
        for (j, lane_ids) in road.iter_mut().enumerate() {
            let off = j as f64 * w;
            let id = b.lane(
                sample(xs[i], xs[i + 1], off + w / 2.0),
                sample(xs[i], xs[i + 1], off - w / 2.0),
                sample(xs[i], xs[i + 1], off),
            );
            let l = b.lane_mut(id);
            l.left_lane_mark_type = mark_left(j);
            l.right_lane_mark_type = mark_right(j);
            lane_ids.push(id);
        }
    }
    for i in 0..xs.len() - 1 {
        for j in 0..k {
            let id = road[j][i];
            if i + 1 < xs.len() - 1 {
                b.link(id, road[j][i + 1]);
            }
            let l = b.lane_mut(id);
            l.right_neighbor_id = (j > 0).then(|| road[j - 1][i]);
            l.left_neighbor_id = (j + 1 < k).then(|| road[j + 1][i]);
        }
    }

    // intersection connectors and exit lanes
    let y_end = f(x_end);
    let int_len = 16.0;
    let exit_len = cfg.segment_length;
    let straight = |x0: f64, x1: f64, y: f64| vec![Point::new(x0, y), Point::new(x1, y)];
    let mut exits = Vec::new();
    let mut connectors = Vec::new();
    for j in 0..k {
        let y = y_end + j as f64 * w;
        let c = b.lane(
            straight(x_end, x_end + int_len, y + w / 2.0),
            straight(x_end, x_end + int_len, y - w / 2.0),
            straight(x_end, x_end + int_len, y),
        );
        let l = b.lane_mut(c);
        l.is_intersection = true;
        l.left_lane_mark_type = LaneMarkType::NONE;
        l.right_lane_mark_type = LaneMarkType::NONE;
        b.link(*road[j].last().unwrap(), c);
        connectors.push(c);

        let x0 = x_end + int_len;
        let e = b.lane(
            straight(x0, x0 + exit_len, y + w / 2.0),
            straight(x0, x0 + exit_len, y - w / 2.0),
            straight(x0, x0 + exit_len, y),
        );
        let l = b.lane_mut(e);
        l.left_lane_mark_type = mark_left(j);
        l.right_lane_mark_type = mark_right(j);
        b.link(c, e);
        exits.push(e);
    }
    for j in 0..k {
        let l = b.lane_mut(exits[j]);
        l.right_neighbor_id = (j > 0).then(|| exits[j - 1]);
        l.left_neighbor_id = (j + 1 < k).then(|| exits[j + 1]);
    }

    if cfg.turns {
        // right turn out of the rightmost lane
        let r = 10.0;
        let y0 = y_end;
        let centre = Point::new(x_end, y0 - r);
        let rt = b.lane(
            arc(centre, r + w / 2.0, FRAC_PI_2, 0.0, 7),
            arc(centre, r - w / 2.0, FRAC_PI_2, 0.0, 7),
            arc(centre, r, FRAC_PI_2, 0.0, 7),
        );
        let l = b.lane_mut(rt);
        l.is_intersection = true;
        l.left_lane_mark_type = LaneMarkType::NONE;
        l.right_lane_mark_type = LaneMarkType::NONE;
        b.link(*road[0].last().unwrap(), rt);

        // left turn out of the leftmost lane
        let rl = 14.0;
        let yk = y_end + (k - 1) as f64 * w;
        let centre = Point::new(x_end, yk + rl);
        let lt = b.lane(
            arc(centre, rl - w / 2.0, -FRAC_PI_2, 0.0, 7),
            arc(centre, rl + w / 2.0, -FRAC_PI_2, 0.0, 7),
            arc(centre, rl, -FRAC_PI_2, 0.0, 7),
        );
        let l = b.lane_mut(lt);
        l.is_intersection = true;
        l.left_lane_mark_type = LaneMarkType::NONE;
        l.right_lane_mark_type = LaneMarkType::NONE;
        b.link(*road[k - 1].last().unwrap(), lt);
    }

    if cfg.crossings {
        let span_lo = -w / 2.0 - 0.5;
        let span_hi = (k - 1) as f64 * w + w / 2.0 + 0.5;
        for xc in [x_end - 3.0, x_end + int_len + 2.5] {
            let cw = rng.random_range(3.0..4.0);
            let yc = if xc < x_end { f(xc) } else { y_end };
            // axis points along +y, so the left boundary lies at smaller x
            let id = b.id();
            let g = ElementGeometry {
                left: Polyline2D::new(straight2(xc - cw / 2.0, yc + span_lo, yc + span_hi))
                    .unwrap(),
                right: Polyline2D::new(straight2(xc + cw / 2.0, yc + span_lo, yc + span_hi))
                    .unwrap(),
                centerline: Polyline2D::new(straight2(xc, yc + span_lo, yc + span_hi)).unwrap(),
            };
            b.scene
                .pedestrian_crossings
                .insert(id, PedestrianCrossing::new(id, g));
        }
    }

    // trajectory along the rightmost lane and its straight continuation
    let mut path: Vec<Point> = Vec::new();
    for id in road[0].iter().chain([&connectors[0], &exits[0]]) {
        let c = &b.scene.lane_segments[id].geometry.centerline;
        for p in c.points() {
            if path.last().is_none_or(|q| q.dist(*p) > 1e-9) {
                path.push(*p);
            }
        }
    }
    let path = Polyline2D::new(path).expect("trajectory");
    let step = 2.0;
    let n = (path.length() / step).floor() as usize + 1;
    let local_poses: Vec<(Point, f64)> = (0..n)
        .map(|i| {
            let (p, t) = path.point_and_tangent_at(i as f64 * step);
            (p, t.y.atan2(t.x))
        })
        .collect();

    // place the scene somewhere in the world
    let theta = rng.random_range(0.0..2.0 * PI);
    let shift = Point::new(
        rng.random_range(-500.0..500.0),
        rng.random_range(-500.0..500.0),
    );
    let place = |p: Point| (p.rotate(theta) + shift).quantized();
    let mut scene = b.scene;
    for l in scene.lane_segments.values_mut() {
        l.geometry = place_geometry(&l.geometry, &place);
        l.normalize_links();
    }
    for c in scene.pedestrian_crossings.values_mut() {
        c.geometry = place_geometry(&c.geometry, &place);
    }
    let poses = local_poses
        .into_iter()
        .enumerate()
        .map(|(i, (p, h))| {
            let q = place(p);
            EgoPose::new(
                i as i64 * 100_000_000,
                q.x,
                q.y,
                crate::geometry::wrap_angle(h + theta),
            )
        })
        .collect();
    (scene, poses)
}

fn straight2(x: f64, y0: f64, y1: f64) -> Vec<Point> {
    vec![Point::new(x, y0), Point::new(x, y1)]
}

fn place_geometry(g: &ElementGeometry, place: &impl Fn(Point) -> Point) -> ElementGeometry {
    let f = |p: &Polyline2D| {
        Polyline2D::from_points_dedup(p.points().iter().map(|&q| place(q)).collect())
            .expect("placement keeps polylines valid")
    };
    ElementGeometry {
        left: f(&g.left),
        right: f(&g.right),
        centerline: f(&g.centerline),
    }
}
