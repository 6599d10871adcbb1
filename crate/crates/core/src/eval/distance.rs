//! Polyline distances used for matching predictions to ground truth.

use super::Sampled;
use crate::error::EvalError;
use crate::geometry::Point;
use crate::map::{ElementGeometry, ElementKind};

/// Points per polyline after resampling.
pub const SAMPLE_POINTS: usize = 10;

fn mean_nearest(from: &[Point], to: &[Point]) -> f64 {
    from.iter()
        .map(|p| to.iter().map(|q| p.dist(*q)).fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / from.len() as f64
}

/// Symmetric Chamfer distance: the average of both directed mean
/// nearest-neighbor distances.
pub fn chamfer(p: &[Point], q: &[Point]) -> Result<f64, EvalError> {
    if p.is_empty() || q.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    Ok(0.5 * (mean_nearest(p, q) + mean_nearest(q, p)))
}

/// Discrete Fréchet distance between two vertex sequences.
pub fn frechet(p: &[Point], q: &[Point]) -> Result<f64, EvalError> {
    if p.is_empty() || q.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let m = q.len();
    let mut prev = vec![0.0f64; m];
    let mut cur = vec![0.0; m];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            let d = a.dist(*b);
            let reach = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => cur[j - 1],
                (_, 0) => prev[0],
                _ => prev[j].min(prev[j - 1]).min(cur[j - 1]),
            };
            cur[j] = d.max(reach);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

pub(crate) fn sampled_distance(kind: ElementKind, gt: &Sampled, pred: &Sampled) -> f64 {
    let c = chamfer(&gt.boundaries, &pred.boundaries).expect("non-empty samples");
    match kind {
        ElementKind::PedestrianCrossing => c,
        ElementKind::LaneSegment => {
            0.5 * (c + frechet(&gt.centerline, &pred.centerline).expect("non-empty samples"))
        }
    }
}

/// Change-gated lane segment distance. Returns infinity when the change
/// classes disagree, which makes the pair unmatchable at any threshold.
pub fn lane_distance(
    gt: &ElementGeometry,
    pred: &ElementGeometry,
    c_match: bool,
) -> Result<f64, EvalError> {
    element_distance(ElementKind::LaneSegment, gt, pred, c_match)
}

/// Like [`lane_distance`], but crossings use the Chamfer term only.
pub fn element_distance(
    kind: ElementKind,
    gt: &ElementGeometry,
    pred: &ElementGeometry,
    c_match: bool,
) -> Result<f64, EvalError> {
    if !c_match {
        return Ok(f64::INFINITY);
    }
    let g = Sampled::new(gt, "")?;
    let p = Sampled::new(pred, "")?;
    Ok(sampled_distance(kind, &g, &p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polyline2D;

    fn straight(dy: f64) -> ElementGeometry {
        let line = |y: f64| {
            Polyline2D::new(vec![Point::new(0.0, y + dy), Point::new(20.0, y + dy)]).unwrap()
        };
        ElementGeometry {
            left: line(2.5),
            right: line(-2.5),
            centerline: line(0.0),
        }
    }

    #[test]
    fn chamfer_single_pair() {
        let d = chamfer(&[Point::new(0.0, 0.0)], &[Point::new(3.0, 4.0)]).unwrap();
        assert_eq!(d, 5.0);
        assert_eq!(
            chamfer(&[], &[Point::new(0.0, 0.0)]),
            Err(EvalError::EmptyInput)
        );
    }

    #[test]
    fn frechet_parallel_offset() {
        let p: Vec<_> = (0..5).map(|i| Point::new(i as f64, 0.0)).collect();
        let q: Vec<_> = (0..5).map(|i| Point::new(i as f64, 2.0)).collect();
        assert_eq!(frechet(&p, &q).unwrap(), 2.0);
        assert_eq!(frechet(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn gated_distance() {
        let a = straight(0.0);
        assert_eq!(lane_distance(&a, &a, true).unwrap(), 0.0);
        assert_eq!(lane_distance(&a, &a, false).unwrap(), f64::INFINITY);
    }

    #[test]
    fn rigid_offset_lane_distance() {
        // boundaries 5 m apart, shifted by 2 m: nearest point stays on the
        // same boundary, so both terms are the translation length
        let d = lane_distance(&straight(0.0), &straight(2.0), true).unwrap();
        assert!((d - 2.0).abs() < 1e-12, "{d}");
    }
}
