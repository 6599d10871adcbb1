use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::seeded;
use crate::change::{diff_maps, ChangeSet};
use crate::geometry::Point;
use crate::map::{ElementId, MapScene};

/// Drifts shorter than this are redrawn so every shift is a visible edit.
const MIN_DRIFT: f64 = 0.01;

/// Independently delete each element with probability `p_del` or shift it
/// rigidly by one Gaussian drift vector (per-axis standard deviation
/// `sigma`) with probability `p_shift`.
///
/// Returns the prior and the change set restoring `gt` from it: insertions
/// for deleted elements, geometry changes for shifted ones and the
/// connectivity changes undoing the scrubbed references.
pub fn perturb_discrete(
    gt: &MapScene,
    p_del: f64,
    p_shift: f64,
    sigma: f64,
    seed: u64,
) -> (MapScene, ChangeSet) {
    assert!(
        (0.0..=1.0).contains(&p_del) && (0.0..=1.0).contains(&p_shift) && p_del + p_shift <= 1.0,
        "probabilities must satisfy p_del + p_shift <= 1"
    );
    let gt = gt.without_history();
    let mut rng = seeded(seed);
    let normal = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma"));
    let mut prior = gt.clone();
    let ids: Vec<ElementId> = gt.ids().into_iter().collect();
    for id in ids {
        let u: f64 = rng.random();
        if u < p_del {
            prior.remove_and_scrub(id);
        } else if u < p_del + p_shift {
            let Some(normal) = normal else { continue };
            let drift = loop {
                let d = Point::new(normal.sample(&mut rng), normal.sample(&mut rng)).quantized();
                if d.norm() >= MIN_DRIFT {
                    break d;
                }
            };
            let shift = |g: &crate::map::ElementGeometry| {
                g.translated(drift)
                    .quantized()
                    .expect("translation keeps polylines valid")
            };
            if let Some(l) = prior.lane_segments.get_mut(&id) {
                l.geometry = shift(&l.geometry);
            } else if let Some(c) = prior.pedestrian_crossings.get_mut(&id) {
                c.geometry = shift(&c.geometry);
            }
        }
    }
    let cs = diff_maps(&prior, &gt).expect("ids keep their kind");
    (prior, cs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::change::apply_changeset;
    use crate::prior::synthetic::{road_scene, SyntheticConfig};

    #[test]
    fn zero_probabilities_are_identity() {
        let (s, _) = road_scene(&SyntheticConfig::default(), 3);
        let (p, cs) = perturb_discrete(&s, 0.0, 0.0, 0.5, 1);
        assert_eq!(p, s);
        assert!(cs.is_empty());
    }

    #[test]
    fn delete_everything() {
        let (s, _) = road_scene(&SyntheticConfig::default(), 3);
        let (p, cs) = perturb_discrete(&s, 1.0, 0.0, 0.5, 1);
        assert!(p.is_empty());
        assert_eq!(cs.len(), s.len());
        assert_eq!(cs.insertions().count(), s.len());
    }

    #[test]
    fn restores_ground_truth() {
        let (s, _) = road_scene(&SyntheticConfig::default(), 4);
        let (p, cs) = perturb_discrete(&s, 0.2, 0.2, 0.5, 2);
        assert_eq!(apply_changeset(&p, &cs).unwrap().without_history(), s);
    }
}
