//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use mapchange::eval::{
    element_distance, ChangeStatus, EvalClass, FrameSample, GroundTruthElement, PredictedElement,
    PrimaryLabel,
};
use mapchange::geometry::{Point, Polyline2D};
use mapchange::map::{
    crop_patch, ChangeTag, ElementGeometry, ElementId, ElementKind, LaneMarkType, LaneSegment,
    LaneType, MapScene,
};
use mapchange::merge::{merge_pair, mergeable_pairs, MergePolicy};
use mapchange::prior::synthetic::{road_scene, SyntheticConfig};
use mapchange::prior::{perturb_discrete, perturb_rulebased, RuleBasedConfig};
use mapchange::stats::SceneRecord;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn straight(x0: f64, x1: f64, y: f64, width: f64) -> ElementGeometry {
    let line =
        |dy: f64| Polyline2D::new(vec![Point::new(x0, y + dy), Point::new(x1, y + dy)]).unwrap();
    ElementGeometry {
        left: line(width / 2.0),
        right: line(-width / 2.0),
        centerline: line(0.0),
    }
}

pub fn lane(id: i64, x0: f64, x1: f64, y: f64, width: f64) -> LaneSegment {
    LaneSegment::new(ElementId(id), straight(x0, x1, y, width))
}

pub fn scene(id: &str, lanes: Vec<LaneSegment>) -> MapScene {
    let mut s = MapScene::new(id);
    for l in lanes {
        s.lane_segments.insert(l.id, l);
    }
    s.normalize_links();
    s
}

fn link(from: &mut LaneSegment, to: &mut LaneSegment) {
    from.successors.push(to.id);
    to.predecessors.push(from.id);
}

fn neighbors(left: &mut LaneSegment, right: &mut LaneSegment) {
    left.right_neighbor_id = Some(right.id);
    right.left_neighbor_id = Some(left.id);
}

/// Road widening from one to two lanes between an entry segment `P` (id 10)
/// and an exit segment `S` (id 20). The prior has a single middle lane 1 on
/// y = 0. The ground truth has two lanes centred on y = +1.75 and y = -1.75.
/// The three variants encode the same final road with different ids:
///
/// * top: lane 1 moves left, new lane 2 is inserted on the right;
/// * central: lane 1 moves right, new lane 2 is inserted on the left;
/// * bottom: lane 1 is deleted, lanes 2 (left) and 3 (right) are inserted.
pub struct Widening {
    pub prior: MapScene,
    pub top: MapScene,
    pub central: MapScene,
    pub bottom: MapScene,
}

pub fn widening() -> Widening {
    let entry_exit = || {
        let mut p = lane(10, -20.0, 0.0, 0.0, 3.5);
        let mut s = lane(20, 20.0, 40.0, 0.0, 3.5);
        p.right_lane_mark_type = LaneMarkType::SOLID_WHITE;
        s.right_lane_mark_type = LaneMarkType::SOLID_WHITE;
        (p, s)
    };
    let (mut p, mut s) = entry_exit();
    let mut one = lane(1, 0.0, 20.0, 0.0, 3.5);
    one.right_lane_mark_type = LaneMarkType::SOLID_WHITE;
    link(&mut p, &mut one);
    link(&mut one, &mut s);
    let prior = scene("widening", vec![p, one, s]);

    let two_lanes = |left_id: i64, right_id: i64| {
        let (mut p, mut s) = entry_exit();
        let mut l = lane(left_id, 0.0, 20.0, 1.75, 3.5);
        let mut r = lane(right_id, 0.0, 20.0, -1.75, 3.5);
        r.right_lane_mark_type = LaneMarkType::SOLID_WHITE;
        neighbors(&mut l, &mut r);
        for x in [&mut l, &mut r] {
            link(&mut p, x);
            link(x, &mut s);
        }
        scene("widening", vec![p, l, r, s])
    };
    Widening {
        prior,
        top: two_lanes(1, 2),
        central: two_lanes(2, 1),
        bottom: two_lanes(2, 3),
    }
}

/// A bike lane (id 2, right of vehicle lane 1) opened to vehicles: it is
/// widened, its type changes and the boundary between the two lanes turns
/// from solid to dashed. `replaced` encodes the same road with the bike lane
/// deleted and a new vehicle lane 3 inserted.
pub struct BikeOpening {
    pub prior: MapScene,
    pub gt: MapScene,
    pub replaced: MapScene,
}

pub fn bike_opening() -> BikeOpening {
    let mut v = lane(1, 0.0, 30.0, 2.5, 3.5);
    let mut b = lane(2, 0.0, 30.0, 0.0, 1.5);
    b.lane_type = LaneType::Bike;
    v.right_lane_mark_type = LaneMarkType::SOLID_WHITE;
    b.left_lane_mark_type = LaneMarkType::SOLID_WHITE;
    b.right_lane_mark_type = LaneMarkType::SOLID_WHITE;
    neighbors(&mut v, &mut b);
    let prior = scene("bike", vec![v.clone(), b.clone()]);

    let opened = |id: i64| {
        let mut v = v.clone();
        let mut o = lane(id, 0.0, 30.0, -0.25, 3.0);
        v.right_lane_mark_type = LaneMarkType::DASHED_WHITE;
        o.left_lane_mark_type = LaneMarkType::DASHED_WHITE;
        o.right_lane_mark_type = LaneMarkType::SOLID_WHITE;
        neighbors(&mut v, &mut o);
        scene("bike", vec![v, o])
    };
    BikeOpening {
        prior,
        gt: opened(2),
        replaced: opened(3),
    }
}

// ---------------------------------------------------------------------------
// evaluation toys

const STATUSES: [ChangeStatus; 5] = [
    ChangeStatus::UNCHANGED,
    ChangeStatus::primary(PrimaryLabel::Insertion),
    ChangeStatus::primary(PrimaryLabel::Deletion),
    ChangeStatus::other(true, false),
    ChangeStatus::other(true, true),
];

fn wobbly(rng: &mut ChaCha8Rng, origin: Point, len: f64) -> ElementGeometry {
    let heading: f64 = rng.random_range(0.0..6.3);
    let n = rng.random_range(2..=4);
    let dir = Point::new(heading.cos(), heading.sin());
    let normal = dir.perp();
    let center: Vec<Point> = (0..n)
        .map(|k| {
            let s = len * k as f64 / (n - 1) as f64;
            origin + dir * s + normal * rng.random_range(-0.3..0.3)
        })
        .collect();
    let center = Polyline2D::new(center).unwrap();
    let w = rng.random_range(1.5..2.0);
    ElementGeometry {
        left: center.map_points(|p| p + normal * w).unwrap(),
        right: center.map_points(|p| p - normal * w).unwrap(),
        centerline: center,
    }
}

fn jitter(rng: &mut ChaCha8Rng, g: &ElementGeometry, sigma: f64) -> ElementGeometry {
    let d = Point::new(
        rng.random_range(-sigma..sigma),
        rng.random_range(-sigma..sigma),
    );
    g.translated(d)
}

/// Random frame with at most `max_elements` ground-truth and prediction
/// elements in total. Predictions are noisy copies of ground truth with
/// random labels, plus spurious ones.
pub fn toy_frame(rng: &mut ChaCha8Rng, id: &str, max_elements: usize) -> FrameSample {
    let n_gt = rng.random_range(0..=max_elements / 2);
    let mut ground_truth = Vec::new();
    for _ in 0..n_gt {
        let kind = if rng.random_bool(0.7) {
            ElementKind::LaneSegment
        } else {
            ElementKind::PedestrianCrossing
        };
        let origin = Point::new(rng.random_range(0.0..12.0), rng.random_range(0.0..12.0));
        ground_truth.push(GroundTruthElement {
            kind,
            geometry: {
                let len = rng.random_range(4.0..10.0);
                wobbly(rng, origin, len)
            },
            status: STATUSES[rng.random_range(0..STATUSES.len())],
        });
    }
    let n_pred = rng.random_range(0..=max_elements - n_gt);
    let mut predictions = Vec::new();
    for _ in 0..n_pred {
        let (kind, geometry, status) = if !ground_truth.is_empty() && rng.random_bool(0.7) {
            let g = &ground_truth[rng.random_range(0..ground_truth.len())];
            let status = if rng.random_bool(0.7) {
                g.status
            } else {
                STATUSES[rng.random_range(0..STATUSES.len())]
            };
            (g.kind, jitter(rng, &g.geometry, 2.5), status)
        } else {
            let origin = Point::new(rng.random_range(0.0..12.0), rng.random_range(0.0..12.0));
            (
                ElementKind::LaneSegment,
                wobbly(rng, origin, 6.0),
                STATUSES[rng.random_range(0..STATUSES.len())],
            )
        };
        // coarse confidences produce ties on purpose
        let confidence = f64::from(rng.random_range(0..=10u8)) / 10.0;
        predictions.push(PredictedElement {
            kind,
            geometry,
            confidence,
            status,
        });
    }
    FrameSample {
        frame_id: id.to_string(),
        predictions,
        ground_truth,
    }
}

pub fn toy_frames(seed: u64, n: usize, max_elements: usize) -> Vec<FrameSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| toy_frame(&mut rng, &format!("frame-{i:03}"), max_elements))
        .collect()
}

// ---------------------------------------------------------------------------
// oracles

/// Directed mean nearest distance, written as explicit loops.
fn directed(p: &[Point], q: &[Point]) -> f64 {
    let mut total = 0.0;
    for a in p {
        let mut best = f64::INFINITY;
        for b in q {
            let d = (a.x - b.x).hypot(a.y - b.y);
            if d < best {
                best = d;
            }
        }
        total += best;
    }
    total / p.len() as f64
}

pub fn chamfer_oracle(p: &[Point], q: &[Point]) -> f64 {
    0.5 * (directed(p, q) + directed(q, p))
}

/// Discrete Fréchet distance by enumerating every monotone coupling.
pub fn frechet_oracle(p: &[Point], q: &[Point]) -> f64 {
    fn walk(p: &[Point], q: &[Point], i: usize, j: usize, leash: f64, best: &mut f64) {
        let leash = leash.max(p[i].dist(q[j]));
        if i + 1 == p.len() && j + 1 == q.len() {
            *best = best.min(leash);
            return;
        }
        if i + 1 < p.len() {
            walk(p, q, i + 1, j, leash, best);
        }
        if j + 1 < q.len() {
            walk(p, q, i, j + 1, leash, best);
        }
        if i + 1 < p.len() && j + 1 < q.len() {
            walk(p, q, i + 1, j + 1, leash, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(p, q, 0, 0, 0.0, &mut best);
    best
}

/// All partial one-to-one assignments of `n_pred` predictions to `n_gt`
/// ground-truth slots.
fn assignments(n_pred: usize, n_gt: usize) -> Vec<Vec<Option<usize>>> {
    fn rec(
        i: usize,
        n_pred: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<Option<usize>>,
        out: &mut Vec<Vec<Option<usize>>>,
    ) {
        if i == n_pred {
            out.push(cur.clone());
            return;
        }
        cur.push(None);
        rec(i + 1, n_pred, used, cur, out);
        cur.pop();
        for g in 0..used.len() {
            if !used[g] {
                used[g] = true;
                cur.push(Some(g));
                rec(i + 1, n_pred, used, cur, out);
                cur.pop();
                used[g] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(0, n_pred, &mut vec![false; n_gt], &mut Vec::new(), &mut out);
    out
}

/// (matched, -distance, -ground-truth index) of one prediction.
type RankKey = (u8, f64, i64);

/// Brute-force AP in percent, or `None` without ground truth.
///
/// Within each frame, every feasible assignment (matched pairs within the
/// threshold) is enumerated and the one that is lexicographically best in
/// confidence rank order is kept: an earlier prediction prefers being
/// matched, then a smaller distance, then a lower ground-truth index.
/// AP sums recall increments times the best precision at equal or higher
/// recall.
pub fn ap_oracle(
    frames: &[FrameSample],
    class: EvalClass,
    kind: ElementKind,
    thresholds: &[f64],
) -> Option<f64> {
    struct P {
        conf: f64,
        frame_id: String,
        index: usize,
        frame: usize,
    }
    let mut preds = Vec::new();
    let mut dist: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    let mut n_gt_frame = Vec::new();
    for (fi, f) in frames.iter().enumerate() {
        let gts: Vec<_> = f
            .ground_truth
            .iter()
            .filter(|g| g.kind == kind && class.contains(&g.status))
            .collect();
        n_gt_frame.push(gts.len());
        for (pi, p) in f.predictions.iter().enumerate() {
            if p.kind != kind || !class.contains(&p.status) {
                continue;
            }
            let d = gts
                .iter()
                .map(|g| element_distance(kind, &g.geometry, &p.geometry, true).unwrap())
                .collect();
            dist.insert((fi, pi), d);
            preds.push(P {
                conf: p.confidence,
                frame_id: f.frame_id.clone(),
                index: pi,
                frame: fi,
            });
        }
    }
    let n_gt: usize = n_gt_frame.iter().sum();
    if n_gt == 0 {
        return None;
    }
    preds.sort_by(|a, b| {
        b.conf
            .partial_cmp(&a.conf)
            .unwrap()
            .then_with(|| a.frame_id.cmp(&b.frame_id))
            .then(a.index.cmp(&b.index))
    });

    let mut total = 0.0;
    for &thr in thresholds {
        let mut tp = vec![false; preds.len()];
        for (fi, &ng) in n_gt_frame.iter().enumerate() {
            let ranks: Vec<usize> = (0..preds.len()).filter(|&r| preds[r].frame == fi).collect();
            let d = |r: usize, g: usize| dist[&(fi, preds[r].index)][g];
            let mut best: Option<(Vec<RankKey>, Vec<Option<usize>>)> = None;
            for a in assignments(ranks.len(), ng) {
                if a.iter()
                    .zip(&ranks)
                    .any(|(g, &r)| g.is_some_and(|g| d(r, g) > thr))
                {
                    continue;
                }
                let key: Vec<RankKey> = a
                    .iter()
                    .zip(&ranks)
                    .map(|(g, &r)| match g {
                        Some(g) => (1, -d(r, *g), -(*g as i64)),
                        None => (0, 0.0, 0),
                    })
                    .collect();
                let better = match &best {
                    None => true,
                    Some((k, _)) => key.partial_cmp(k) == Some(std::cmp::Ordering::Greater),
                };
                if better {
                    best = Some((key, a));
                }
            }
            let (_, a) = best.unwrap();
            for (g, &r) in a.iter().zip(&ranks) {
                tp[r] = g.is_some();
            }
        }
        let mut precision = Vec::new();
        let mut recall = Vec::new();
        let mut hits = 0.0;
        for (k, &t) in tp.iter().enumerate() {
            if t {
                hits += 1.0;
            }
            precision.push(hits / (k + 1) as f64);
            recall.push(hits / n_gt as f64);
        }
        let mut ap = 0.0;
        let mut prev_recall = 0.0;
        for k in 0..tp.len() {
            let envelope = precision[k..].iter().cloned().fold(0.0, f64::max);
            ap += (recall[k] - prev_recall) * envelope;
            prev_recall = recall[k];
        }
        total += ap;
    }
    Some(100.0 * total / thresholds.len() as f64)
}

/// Synthetic road layout varied by seed.
pub fn synthetic_config(seed: u64) -> SyntheticConfig {
    SyntheticConfig {
        lanes: 2 + (seed % 3) as usize,
        segments: 3 + (seed % 4) as usize,
        turns: !seed.is_multiple_of(5),
        crossings: !seed.is_multiple_of(7),
        ..SyntheticConfig::default()
    }
}

// ---------------------------------------------------------------------------
// merging

/// A curved chain of `n` segments sharing their joint vertices exactly.
pub fn curved_chain(n: usize) -> MapScene {
    let at = |t: f64, off: f64| {
        let a = t * 0.08;
        let r = 60.0 + off;
        Point::new(r * a.sin(), 60.0 - r * a.cos())
    };
    let mut s = MapScene::new("chain");
    for i in 0..n {
        let ts: Vec<f64> = (0..3).map(|k| 4.0 * i as f64 + 2.0 * k as f64).collect();
        let line = |off: f64| Polyline2D::new(ts.iter().map(|&t| at(t, off)).collect()).unwrap();
        let id = ElementId(i as i64 + 1);
        let mut l = LaneSegment::new(
            id,
            ElementGeometry {
                left: line(-1.75),
                right: line(1.75),
                centerline: line(0.0),
            },
        );
        if i > 0 {
            l.predecessors = vec![ElementId(i as i64)];
        }
        if i + 1 < n {
            l.successors = vec![ElementId(i as i64 + 2)];
        }
        s.lane_segments.insert(id, l);
    }
    s
}

pub fn merge_totals(s: &MapScene) -> (f64, f64) {
    s.lane_segments.values().fold((0.0, 0.0), |(len, area), l| {
        (
            len + l.geometry.centerline.length(),
            area + l.geometry.area(),
        )
    })
}

/// Every fixed point reachable by merging one mergeable pair at a time.
pub fn merge_outcomes(s: &MapScene, policy: &MergePolicy, out: &mut Vec<MapScene>) {
    let pairs = mergeable_pairs(s, policy);
    if pairs.is_empty() {
        if !out.contains(s) {
            out.push(s.clone());
        }
        return;
    }
    for (a, b) in pairs {
        let next = merge_pair(s, a, b, policy).expect("listed pair merges");
        merge_outcomes(&next, policy, out);
    }
}

// ---------------------------------------------------------------------------
// statistics

pub const STATS_LABELS: [&str; 11] = [
    "total",
    "of which changed",
    "ls geometry",
    "ls mark",
    "ls insertion",
    "ls deletion",
    "ls topology",
    "ls type",
    "pc geometry",
    "pc insertion",
    "pc deletion",
];

pub fn stats_corpus() -> Vec<SceneRecord> {
    let splits = ["train", "val", "test", "extra"];
    (0..24u64)
        .map(|seed| {
            let (gt, poses) = road_scene(&SyntheticConfig::default(), seed);
            let (prior, cs) = if seed % 2 == 0 {
                let (p, cs, _) =
                    perturb_rulebased(&gt, &poses, &RuleBasedConfig::default(), seed).unwrap();
                (p, cs)
            } else {
                perturb_discrete(&gt, 0.2, 0.2, 0.5, seed)
            };
            let poses = poses.into_iter().step_by(5).collect();
            SceneRecord::from_change(splits[seed as usize % 4], &prior, &cs, poses).unwrap()
        })
        .collect()
}

/// Which labels an element with `tags` counts under, spelled out per row.
fn labels_of(kind: ElementKind, tags: &BTreeSet<ChangeTag>) -> Vec<&'static str> {
    let mut v = vec!["total"];
    if tags.iter().any(|t| !matches!(t, ChangeTag::Connectivity)) {
        v.push("of which changed");
    }
    let prefix = match kind {
        ElementKind::LaneSegment => "ls",
        ElementKind::PedestrianCrossing => "pc",
    };
    for t in tags {
        let name = match t {
            ChangeTag::Geometry => "geometry",
            ChangeTag::Marking => "mark",
            ChangeTag::Insertion => "insertion",
            ChangeTag::Deletion => "deletion",
            ChangeTag::Reroute => "topology",
            ChangeTag::Type => "type",
            ChangeTag::Connectivity => continue,
        };
        let label = format!("{prefix} {name}");
        if let Some(l) = STATS_LABELS.iter().find(|l| **l == label) {
            v.push(l);
        }
    }
    v
}

pub type Recount = BTreeMap<(&'static str, String), (usize, usize, usize)>;

pub fn stats_recount(records: &[SceneRecord], extent: f64) -> Recount {
    let mut out = Recount::new();
    for r in records {
        let mut element: BTreeMap<&str, usize> = BTreeMap::new();
        for e in r.annotated.elements() {
            for l in labels_of(e.kind(), &e.history().tags()) {
                *element.entry(l).or_default() += 1;
            }
        }
        let mut frame: BTreeMap<&str, usize> = BTreeMap::new();
        for p in &r.poses {
            let patch = crop_patch(&r.annotated, p, extent).scene;
            let seen: BTreeSet<&str> = patch
                .elements()
                .flat_map(|e| {
                    let tags = r.annotated.element(e.id()).unwrap().history().tags();
                    labels_of(e.kind(), &tags)
                })
                .collect();
            for l in STATS_LABELS {
                if seen.contains(l) || l == "total" {
                    *frame.entry(l).or_default() += 1;
                }
            }
        }
        for l in STATS_LABELS {
            let n = element.get(l).copied().unwrap_or(0);
            let c = out.entry((l, r.split.clone())).or_default();
            c.0 += usize::from(n > 0 || l == "total");
            c.1 += frame.get(l).copied().unwrap_or(0);
            c.2 += n;
        }
    }
    out
}
