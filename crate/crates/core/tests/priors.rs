use mapchange::map::{ElementKind, MapScene};
use mapchange::prior::synthetic::{road_scene, SyntheticConfig};
use mapchange::prior::{perturb_continuous, perturb_discrete, perturb_rulebased, RuleBasedConfig};

fn boundary_offsets(gt: &MapScene, prior: &MapScene) -> Vec<f64> {
    let mut out = Vec::new();
    for e in gt.elements() {
        let g = e.geometry();
        let p = prior.geometry(e.id()).unwrap();
        for (a, b) in [(&g.left, &p.left), (&g.right, &p.right)] {
            if a.len() != b.len() {
                continue;
            }
            for (u, v) in a.points().iter().zip(b.points()) {
                out.push(v.x - u.x);
                out.push(v.y - u.y);
            }
        }
    }
    out
}

#[test]
fn continuous_noise_has_the_requested_spread() {
    let mut d = Vec::new();
    for seed in 0..40 {
        let (gt, _) = road_scene(&SyntheticConfig::default(), seed);
        d.extend(boundary_offsets(&gt, &perturb_continuous(&gt, 0.5, seed)));
    }
    assert!(d.len() > 5000, "{}", d.len());
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let std = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() < 0.02, "mean {mean}");
    assert!((std - 0.5).abs() <= 0.02, "std {std}");
}

#[test]
fn continuous_centerline_is_boundary_midline() {
    let (gt, _) = road_scene(&SyntheticConfig::default(), 4);
    let prior = perturb_continuous(&gt, 0.5, 4);
    for l in prior.lane_segments.values() {
        let g = &l.geometry;
        let n = g.centerline.len();
        let left = g.left.resample(n).unwrap();
        let right = g.right.resample(n).unwrap();
        for ((a, b), m) in left
            .points()
            .iter()
            .zip(right.points())
            .zip(g.centerline.points())
        {
            // midpoints are snapped to the millimetre grid
            assert!(a.lerp(*b, 0.5).dist(*m) <= 1e-3);
        }
    }
}

#[test]
fn discrete_deletes_the_requested_fraction() {
    let (mut total, mut deleted, mut shifted) = (0usize, 0usize, 0usize);
    for seed in 0..400 {
        let (gt, _) = road_scene(&SyntheticConfig::default(), seed);
        let (prior, cs) = perturb_discrete(&gt, 0.2, 0.2, 0.5, seed);
        total += gt.len();
        deleted += gt.len() - prior.len();
        shifted += cs.iter().filter(|(_, k)| k.name() == "geometry").count();
        assert_eq!(cs.insertions().count(), gt.len() - prior.len());
    }
    let frac = deleted as f64 / total as f64;
    assert!(total > 10_000, "{total}");
    assert!((frac - 0.2).abs() <= 0.01, "deleted fraction {frac}");
    // shifts below the diff tolerance vanish, so only an upper bound holds
    let shift = shifted as f64 / total as f64;
    assert!(shift <= 0.21 && shift > 0.15, "shifted fraction {shift}");
}

#[test]
fn rulebased_touches_only_elements_near_the_trajectory() {
    let cfg = RuleBasedConfig::default();
    for seed in 0..30 {
        let (gt, poses) = road_scene(&SyntheticConfig::default(), seed);
        let (prior, cs, log) = perturb_rulebased(&gt, &poses, &cfg, seed).unwrap();
        assert!(log.crossing_attempts <= cfg.max_iterations_per_map);
        assert!(log.bike_lanes.len() <= cfg.max_bike_lanes);
        // inserted crossings live in the prior, so the restoring change set deletes them
        for id in &log.inserted_crossings {
            assert_eq!(prior.kind_of(*id), Some(ElementKind::PedestrianCrossing));
            assert!(!gt.contains(*id));
        }
        let bike: usize = log.bike_lanes.iter().map(Vec::len).sum();
        assert_eq!(cs.deletions().count(), log.inserted_crossings.len() + bike);
    }
}

#[test]
fn invalid_rulebased_config_is_rejected() {
    let (gt, poses) = road_scene(&SyntheticConfig::default(), 0);
    let cfg = RuleBasedConfig {
        width_clip: [4.0, 2.0],
        ..RuleBasedConfig::default()
    };
    assert!(perturb_rulebased(&gt, &poses, &cfg, 0).is_err());
}
