use rand_distr::{Distribution, Normal};

use super::seeded;
use crate::geometry::{Point, Polyline2D};
use crate::map::{ElementGeometry, MapScene};

fn noisy(line: &Polyline2D, noise: &mut impl FnMut() -> f64) -> Vec<Point> {
    line.points()
        .iter()
        .map(|p| Point::new(p.x + noise(), p.y + noise()))
        .collect()
}

/// Midpoints of the two boundaries resampled to `n` points each.
pub(crate) fn midline(left: &Polyline2D, right: &Polyline2D, n: usize) -> Option<Polyline2D> {
    let (l, r) = (left.resample(n).ok()?, right.resample(n).ok()?);
    let pts = l
        .points()
        .iter()
        .zip(r.points())
        .map(|(a, b)| a.lerp(*b, 0.5).quantized())
        .collect();
    Polyline2D::from_points_dedup(pts).ok()
}

fn perturb_geometry(
    g: &ElementGeometry,
    noise: &mut impl FnMut() -> f64,
) -> Option<ElementGeometry> {
    let left = Polyline2D::from_points_dedup(noisy(&g.left, noise))
        .ok()?
        .quantized()
        .ok()?;
    let right = Polyline2D::from_points_dedup(noisy(&g.right, noise))
        .ok()?
        .quantized()
        .ok()?;
    let centerline = midline(&left, &right, g.centerline.len().max(2))?;
    Some(ElementGeometry {
        left,
        right,
        centerline,
    })
}

/// Add i.i.d. Gaussian noise (per axis, standard deviation `sigma`) to every
/// boundary vertex and rebuild centerlines as boundary midpoints. Elements
/// whose noisy geometry degenerates keep their original geometry.
///
/// Noise priors are not expressible as atomic changes, so no change set is
/// returned.
pub fn perturb_continuous(gt: &MapScene, sigma: f64, seed: u64) -> MapScene {
    assert!(sigma >= 0.0, "sigma must be non-negative");
    if sigma == 0.0 {
        return gt.clone();
    }
    let mut rng = seeded(seed);
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    let mut noise = || normal.sample(&mut rng);
    let mut out = gt.without_history();
    for l in out.lane_segments.values_mut() {
        if let Some(g) = perturb_geometry(&l.geometry, &mut noise) {
            l.geometry = g;
        }
    }
    for c in out.pedestrian_crossings.values_mut() {
        if let Some(g) = perturb_geometry(&c.geometry, &mut noise) {
            c.geometry = g;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::synthetic::{road_scene, SyntheticConfig};

    #[test]
    fn zero_sigma_is_identity() {
        let (s, _) = road_scene(&SyntheticConfig::default(), 1);
        assert_eq!(perturb_continuous(&s, 0.0, 5), s);
    }

    #[test]
    fn same_seed_same_output() {
        let (s, _) = road_scene(&SyntheticConfig::default(), 1);
        assert_eq!(
            perturb_continuous(&s, 0.5, 9),
            perturb_continuous(&s, 0.5, 9)
        );
        assert_ne!(
            perturb_continuous(&s, 0.5, 9),
            perturb_continuous(&s, 0.5, 10)
        );
    }
}
