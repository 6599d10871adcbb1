//! Rule-based priors: inserted pedestrian crossings, perturbed lane
//! markings and bike lanes split off the rightmost lane.

use std::collections::BTreeSet;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::continuous::midline;
use super::seeded;
use crate::change::{diff_maps, ChangeSet};
use crate::geometry::{iou_with_convex, ring_path_distance, Point, Polyline2D};
use crate::map::{
    EgoPose, ElementGeometry, ElementId, LaneMarkType, LaneSegment, LaneType, MapScene, MarkStyle,
    PedestrianCrossing, Side,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleBasedConfig {
    /// Sampling weight of intersection lanes relative to other lanes.
    pub intersection_weight: f64,
    pub width_mean: f64,
    pub width_std: f64,
    pub width_clip: [f64; 2],
    pub min_height: f64,
    pub max_iou: f64,
    pub max_iterations_per_map: usize,
    pub trajectory_buffer: f64,
    pub marking_run_length: usize,
    pub bike_run_length: usize,
    pub max_bike_lanes: usize,
    pub marking_sequences: usize,
    pub crossings_per_map: usize,
}

impl Default for RuleBasedConfig {
    fn default() -> Self {
        Self {
            intersection_weight: 4.5,
            width_mean: 3.5,
            width_std: 1.0,
            width_clip: [2.0, 4.0],
            min_height: 2.0,
            max_iou: 0.05,
            max_iterations_per_map: 20,
            trajectory_buffer: 15.0,
            marking_run_length: 3,
            bike_run_length: 5,
            max_bike_lanes: 2,
            marking_sequences: 4,
            crossings_per_map: 1,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RuleBasedError {
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("invalid rule-based config: {0}")]
    InvalidConfig(String),
}

impl RuleBasedConfig {
    pub fn validate(&self) -> Result<(), RuleBasedError> {
        let positive = [
            ("intersection_weight", self.intersection_weight),
            ("width_mean", self.width_mean),
            ("width_std", self.width_std),
            ("min_height", self.min_height),
            ("max_iou", self.max_iou),
            ("trajectory_buffer", self.trajectory_buffer),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(RuleBasedError::InvalidConfig(format!(
                    "{name} must be positive"
                )));
            }
        }
        let [lo, hi] = self.width_clip;
        if !(lo > 0.0 && lo <= hi) {
            return Err(RuleBasedError::InvalidConfig(
                "width_clip must be ordered and positive".into(),
            ));
        }
        Ok(())
    }
}

/// What the generator did, for auditing and statistics.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RuleBasedLog {
    pub crossing_attempts: usize,
    pub inserted_crossings: Vec<ElementId>,
    /// Sampled (clipped) width of each inserted crossing.
    pub crossing_widths: Vec<f64>,
    pub crossing_heights: Vec<f64>,
    /// Lanes whose marking was perturbed, one entry per run.
    pub marking_runs: Vec<Vec<ElementId>>,
    /// Split vehicle lanes, one entry per bike lane.
    pub bike_runs: Vec<Vec<ElementId>>,
    /// Ids of the new bike lane segments, one entry per bike lane.
    pub bike_lanes: Vec<Vec<ElementId>>,
}

struct Ctx<'a> {
    cfg: &'a RuleBasedConfig,
    trajectory: Vec<Point>,
    rng: ChaCha8Rng,
    next_id: i64,
}

impl Ctx<'_> {
    fn fresh_id(&mut self) -> ElementId {
        let id = ElementId(self.next_id);
        self.next_id += 1;
        id
    }

    fn near_trajectory(&self, ring: &[Point]) -> bool {
        ring_path_distance(ring, &self.trajectory) <= self.cfg.trajectory_buffer
    }
}

/// Perturb `gt` with the rule-based procedures and return the prior, the
/// change set restoring `gt` from it, and a log of the applied actions.
///
/// Crossing insertion gives up silently after the configured number of
/// attempts. Only original ground-truth lanes are perturbed, and every
/// perturbed element touches the trajectory buffer.
pub fn perturb_rulebased(
    gt: &MapScene,
    trajectory: &[EgoPose],
    cfg: &RuleBasedConfig,
    seed: u64,
) -> Result<(MapScene, ChangeSet, RuleBasedLog), RuleBasedError> {
    if trajectory.is_empty() {
        return Err(RuleBasedError::EmptyTrajectory);
    }
    cfg.validate()?;
    let gt = gt.without_history();
    let mut ctx = Ctx {
        cfg,
        trajectory: trajectory.iter().map(EgoPose::position).collect(),
        rng: seeded(seed),
        next_id: gt.next_free_id().0,
    };
    let mut prior = gt.clone();
    let mut log = RuleBasedLog::default();

    insert_crossings(&mut ctx, &gt, &mut prior, &mut log);
    let split = insert_bike_lanes(&mut ctx, &gt, &mut prior, &mut log);
    perturb_markings(&mut ctx, &gt, &mut prior, &split, &mut log);

    let cs = diff_maps(&prior, &gt).expect("ids keep their kind");
    Ok((prior, cs, log))
}

/// Offset along `dir` from `origin` where the line hits `line`, closest to
/// the origin.
fn line_hit(origin: Point, dir: Point, line: &Polyline2D) -> Option<f64> {
    let mut best: Option<f64> = None;
    for w in line.points().windows(2) {
        let (a, b) = (w[0], w[1]);
        let s = b - a;
        let denom = dir.cross(s);
        if denom.abs() < 1e-12 {
            continue;
        }
        let t = (a - origin).cross(s) / denom;
        let u = (a - origin).cross(dir) / denom;
        if (-1e-9..=1.0 + 1e-9).contains(&u) && best.is_none_or(|b| t.abs() < b.abs()) {
            best = Some(t);
        }
    }
    best
}

/// Lanes laterally connected to `id` through neighbor links.
fn lateral_group(scene: &MapScene, id: ElementId) -> Vec<ElementId> {
    let mut out = vec![id];
    let mut seen = BTreeSet::from([id]);
    for side in [Side::Left, Side::Right] {
        let mut cur = id;
        while let Some(next) = scene.lane_segments.get(&cur).and_then(|l| l.neighbor(side)) {
            if !seen.insert(next) {
                break;
            }
            out.push(next);
            cur = next;
        }
    }
    out
}

fn insert_crossings(ctx: &mut Ctx, gt: &MapScene, prior: &mut MapScene, log: &mut RuleBasedLog) {
    let lanes: Vec<&LaneSegment> = gt.lane_segments.values().collect();
    if lanes.is_empty() || ctx.cfg.crossings_per_map == 0 {
        return;
    }
    let weights: Vec<f64> = lanes
        .iter()
        .map(|l| {
            if l.is_intersection {
                ctx.cfg.intersection_weight
            } else {
                1.0
            }
        })
        .collect();
    let pick = WeightedIndex::new(&weights).expect("positive weights");
    let width_dist = Normal::new(ctx.cfg.width_mean, ctx.cfg.width_std).expect("finite");
    let [wlo, whi] = ctx.cfg.width_clip;

    while log.inserted_crossings.len() < ctx.cfg.crossings_per_map
        && log.crossing_attempts < ctx.cfg.max_iterations_per_map
    {
        log.crossing_attempts += 1;
        let lane = lanes[pick.sample(&mut ctx.rng)];
        let c = &lane.geometry.centerline;
        let s = ctx.rng.random_range(0.0..=c.length());
        let width = width_dist.sample(&mut ctx.rng).clamp(wlo, whi);
        let (q, t) = c.point_and_tangent_at(s);
        let n = t.perp();

        let mut hits = Vec::new();
        let mut own = 0;
        for id in lateral_group(gt, lane.id) {
            let g = &gt.lane_segments[&id].geometry;
            for b in [&g.left, &g.right] {
                if let Some(h) = line_hit(q, n, b) {
                    hits.push(h);
                    own += usize::from(id == lane.id);
                }
            }
        }
        if own < 2 {
            continue;
        }
        let lo = hits.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = hits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let height = hi - lo;
        if height <= ctx.cfg.min_height {
            continue;
        }

        let (a, b) = (q + n * lo, q + n * hi);
        let side = n.perp() * (width / 2.0);
        let poly = |p: Point, r: Point| Polyline2D::new(vec![p.quantized(), r.quantized()]);
        let (Ok(left), Ok(right), Ok(centerline)) = (
            poly(a + side, b + side),
            poly(a - side, b - side),
            poly(a, b),
        ) else {
            continue;
        };
        let geometry = ElementGeometry {
            left,
            right,
            centerline,
        };
        let ring = geometry.ring();
        if !ctx.near_trajectory(&ring) {
            continue;
        }
        let overlaps = prior
            .pedestrian_crossings
            .values()
            .any(|c| iou_with_convex(&c.geometry.ring(), &ring) >= ctx.cfg.max_iou);
        if overlaps {
            continue;
        }
        let id = ctx.fresh_id();
        prior
            .pedestrian_crossings
            .insert(id, PedestrianCrossing::new(id, geometry));
        log.inserted_crossings.push(id);
        log.crossing_widths.push(width);
        log.crossing_heights.push(height);
    }
}

fn is_bike_candidate(ctx: &Ctx, l: &LaneSegment, used: &BTreeSet<ElementId>) -> bool {
    l.right_neighbor_id.is_none()
        && l.lane_type == LaneType::Vehicle
        && !l.is_intersection
        && !used.contains(&l.id)
        && ctx.near_trajectory(&l.geometry.ring())
}

/// Split each lane of up to `max_bike_lanes` runs of rightmost lanes in
/// half; the right half becomes a bike lane. Returns the split lane ids.
fn insert_bike_lanes(
    ctx: &mut Ctx,
    gt: &MapScene,
    prior: &mut MapScene,
    log: &mut RuleBasedLog,
) -> BTreeSet<ElementId> {
    let mut used = BTreeSet::new();
    for _ in 0..ctx.cfg.max_bike_lanes {
        let starts: Vec<ElementId> = gt
            .lane_segments
            .values()
            .filter(|l| is_bike_candidate(ctx, l, &used))
            .map(|l| l.id)
            .collect();
        if starts.is_empty() {
            break;
        }
        let mut run = vec![starts[ctx.rng.random_range(0..starts.len())]];
        while run.len() < ctx.cfg.bike_run_length {
            let last = &gt.lane_segments[run.last().unwrap()];
            let next = last
                .successors
                .iter()
                .map(|s| &gt.lane_segments[s])
                .find(|l| is_bike_candidate(ctx, l, &used) && !run.contains(&l.id));
            match next {
                Some(l) => run.push(l.id),
                None => break,
            }
        }

        let mut bikes = Vec::new();
        for &id in &run {
            let lane = &gt.lane_segments[&id];
            let g = &lane.geometry;
            let n = g.left.len().max(g.right.len()).max(g.centerline.len());
            let Some(mid) = midline(&g.left, &g.right, n) else {
                continue;
            };
            let (Some(c_keep), Some(c_bike)) =
                (midline(&g.left, &mid, n), midline(&mid, &g.right, n))
            else {
                continue;
            };
            let bike_id = ctx.fresh_id();
            let kept = prior.lane_segments.get_mut(&id).unwrap();
            kept.geometry = ElementGeometry {
                left: g.left.clone(),
                right: mid.clone(),
                centerline: c_keep,
            };
            kept.right_lane_mark_type = LaneMarkType::SOLID_WHITE;
            kept.right_neighbor_id = Some(bike_id);

            let mut bike = LaneSegment::new(
                bike_id,
                ElementGeometry {
                    left: mid,
                    right: g.right.clone(),
                    centerline: c_bike,
                },
            );
            bike.lane_type = LaneType::Bike;
            bike.left_lane_mark_type = LaneMarkType::SOLID_WHITE;
            bike.right_lane_mark_type = LaneMarkType::SOLID_WHITE;
            bike.left_neighbor_id = Some(id);
            prior.lane_segments.insert(bike_id, bike);
            bikes.push(bike_id);
            used.insert(id);
        }
        // chain consecutive bike segments
        for w in bikes.windows(2) {
            prior
                .lane_segments
                .get_mut(&w[0])
                .unwrap()
                .successors
                .push(w[1]);
            prior
                .lane_segments
                .get_mut(&w[1])
                .unwrap()
                .predecessors
                .push(w[0]);
        }
        if !bikes.is_empty() {
            log.bike_runs
                .push(run.iter().copied().filter(|id| used.contains(id)).collect());
            log.bike_lanes.push(bikes);
        }
    }
    used
}

fn toggled(m: LaneMarkType) -> Option<LaneMarkType> {
    let mark = match m.mark {
        MarkStyle::Solid => MarkStyle::Dashed,
        MarkStyle::Dashed => MarkStyle::Solid,
        MarkStyle::DoubleSolid => MarkStyle::DoubleDashed,
        MarkStyle::DoubleDashed => MarkStyle::DoubleSolid,
        _ => return None,
    };
    Some(LaneMarkType::new(mark, m.color))
}

/// Perturb `marking_sequences` runs of up to `marking_run_length` connected
/// lanes: painted boundaries either toggle solid/dashed or lose their paint.
/// Unpainted boundaries are left alone. The neighbor sharing the boundary
/// gets the same new value.
fn perturb_markings(
    ctx: &mut Ctx,
    gt: &MapScene,
    prior: &mut MapScene,
    split: &BTreeSet<ElementId>,
    log: &mut RuleBasedLog,
) {
    let candidates: Vec<ElementId> = gt
        .lane_segments
        .values()
        .filter(|l| !split.contains(&l.id) && ctx.near_trajectory(&l.geometry.ring()))
        .map(|l| l.id)
        .collect();
    if candidates.is_empty() {
        return;
    }
    let mut touched: BTreeSet<ElementId> = split.clone();
    for _ in 0..ctx.cfg.marking_sequences {
        let side = if ctx.rng.random_bool(0.5) {
            Side::Left
        } else {
            Side::Right
        };
        let erase = ctx.rng.random_bool(0.5);
        let mut cur = Some(candidates[ctx.rng.random_range(0..candidates.len())]);
        let mut run = Vec::new();
        while let Some(id) = cur {
            if run.len() >= ctx.cfg.marking_run_length || touched.contains(&id) {
                break;
            }
            let lane = &gt.lane_segments[&id];
            if !ctx.near_trajectory(&lane.geometry.ring()) {
                break;
            }
            let old = lane.mark(side);
            let new = if !old.mark.is_painted() {
                None
            } else if erase {
                Some(LaneMarkType::NONE)
            } else {
                toggled(old).or(Some(LaneMarkType::NONE))
            };
            if let Some(new) = new {
                let neighbor = lane.neighbor(side).filter(|n| !touched.contains(n));
                *prior.lane_segments.get_mut(&id).unwrap().mark_mut(side) = new;
                touched.insert(id);
                if let Some(n) = neighbor {
                    let other = prior.lane_segments.get_mut(&n).unwrap();
                    if other.mark(side.opposite()) == old {
                        *other.mark_mut(side.opposite()) = new;
                        touched.insert(n);
                    }
                }
                run.push(id);
            }
            cur = lane.successors.first().copied();
        }
        if !run.is_empty() {
            log.marking_runs.push(run);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::change::{apply_changeset, validate_canonical};
    use crate::prior::synthetic::{road_scene, SyntheticConfig};

    #[test]
    fn restores_and_is_canonical() {
        for seed in 0..10 {
            let (gt, traj) = road_scene(&SyntheticConfig::default(), seed);
            let (prior, cs, log) =
                perturb_rulebased(&gt, &traj, &RuleBasedConfig::default(), seed).unwrap();
            assert_eq!(apply_changeset(&prior, &cs).unwrap().without_history(), gt);
            let report = validate_canonical(&cs, &prior, &gt);
            assert!(report.is_empty(), "seed {seed}: {report:?}");
            assert!(log.crossing_attempts <= 20);
            assert!(log.bike_lanes.len() <= 2);
        }
    }

    #[test]
    fn empty_trajectory_is_rejected() {
        let (gt, _) = road_scene(&SyntheticConfig::default(), 0);
        assert_eq!(
            perturb_rulebased(&gt, &[], &RuleBasedConfig::default(), 0).unwrap_err(),
            RuleBasedError::EmptyTrajectory
        );
    }

    #[test]
    fn line_hit_finds_nearest_crossing() {
        let line = Polyline2D::new(vec![Point::new(-5.0, 2.0), Point::new(5.0, 2.0)]).unwrap();
        let t = line_hit(Point::new(0.0, 0.0), Point::new(0.0, 1.0), &line).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
    }
}
