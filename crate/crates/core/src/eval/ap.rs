//! Per-class average precision with change-gated greedy matching.

use std::cmp::Ordering;

use super::distance::sampled_distance;
use super::{EvalClass, FrameSample, Sampled};
use crate::error::EvalError;
use crate::map::ElementKind;

/// Matching thresholds for lane segments, meters.
pub const LANE_THRESHOLDS: [f64; 3] = [1.0, 2.0, 3.0];
/// Matching thresholds for pedestrian crossings, meters.
pub const CROSSING_THRESHOLDS: [f64; 3] = [0.5, 1.0, 1.5];

/// One prediction of the pool with its distances to the pooled ground truth
/// of the same frame.
struct Ranked<'a> {
    frame_id: &'a str,
    index: usize,
    confidence: f64,
    frame: usize,
    dists: Vec<f64>,
}

/// All-point interpolated AP of a ranked TP/FP sequence, in [0, 1].
fn envelope_ap(tp: &[bool], n_gt: usize) -> f64 {
    let mut hits = 0usize;
    let precision: Vec<f64> = tp
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            hits += usize::from(t);
            hits as f64 / (i + 1) as f64
        })
        .collect();
    // running maximum from the tail
    let mut best = 0.0f64;
    let mut sum = 0.0;
    for i in (0..tp.len()).rev() {
        best = best.max(precision[i]);
        if tp[i] {
            sum += best;
        }
    }
    sum / n_gt as f64
}

/// `AP_c` for one element kind, in percent. Ground truth and predictions
/// enter the pool when `class` contains their change status, so a
/// prediction can only match ground truth of the same class.
///
/// Predictions are pooled across frames and ranked by descending
/// confidence, ties broken by (frame id, index). Each prediction takes the
/// nearest unmatched ground-truth element within the threshold. Returns
/// `None` when no ground truth of the class and kind exists.
pub fn ap_for_class(
    frames: &[FrameSample],
    class: EvalClass,
    kind: ElementKind,
    thresholds: &[f64],
) -> Result<Option<f64>, EvalError> {
    if thresholds.is_empty()
        || thresholds.iter().any(|t| !(t.is_finite() && *t > 0.0))
        || thresholds.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(EvalError::InvalidThresholds);
    }
    let mut ranked = Vec::new();
    let mut gt_counts = Vec::with_capacity(frames.len());
    for (fi, f) in frames.iter().enumerate() {
        let gts = f
            .ground_truth
            .iter()
            .filter(|g| g.kind == kind && class.contains(&g.status))
            .map(|g| Sampled::new(&g.geometry, &f.frame_id))
            .collect::<Result<Vec<_>, _>>()?;
        gt_counts.push(gts.len());
        for (pi, p) in f.predictions.iter().enumerate() {
            if p.kind != kind || !class.contains(&p.status) {
                continue;
            }
            let s = Sampled::new(&p.geometry, &f.frame_id)?;
            ranked.push(Ranked {
                frame_id: &f.frame_id,
                index: pi,
                confidence: p.confidence,
                frame: fi,
                dists: gts.iter().map(|g| sampled_distance(kind, g, &s)).collect(),
            });
        }
    }
    let n_gt: usize = gt_counts.iter().sum();
    if n_gt == 0 {
        return Ok(None);
    }
    ranked.sort_by(|a, b| {
        b.confidence
            .partial_cmp(&a.confidence)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.frame_id.cmp(b.frame_id))
            .then(a.index.cmp(&b.index))
    });

    let mut total = 0.0;
    for &thr in thresholds {
        let mut taken: Vec<Vec<bool>> = gt_counts.iter().map(|&n| vec![false; n]).collect();
        let tp: Vec<bool> = ranked
            .iter()
            .map(|r| {
                let free = &mut taken[r.frame];
                let best = r
                    .dists
                    .iter()
                    .enumerate()
                    .filter(|&(g, &d)| !free[g] && d <= thr)
                    .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(Ordering::Equal));
                match best {
                    Some((g, _)) => {
                        free[g] = true;
                        true
                    }
                    None => false,
                }
            })
            .collect();
        total += envelope_ap(&tp, n_gt);
    }
    Ok(Some(100.0 * total / thresholds.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{ChangeStatus, GroundTruthElement, PredictedElement, PrimaryLabel};
    use crate::geometry::{Point, Polyline2D};
    use crate::map::ElementGeometry;

    fn geom(dy: f64) -> ElementGeometry {
        let line = |y: f64| {
            Polyline2D::new(vec![Point::new(0.0, y + dy), Point::new(20.0, y + dy)]).unwrap()
        };
        ElementGeometry {
            left: line(2.5),
            right: line(-2.5),
            centerline: line(0.0),
        }
    }

    fn frame(gt: &[(f64, ChangeStatus)], preds: &[(f64, ChangeStatus, f64)]) -> FrameSample {
        FrameSample {
            frame_id: "f".into(),
            ground_truth: gt
                .iter()
                .map(|&(dy, status)| GroundTruthElement {
                    kind: ElementKind::LaneSegment,
                    geometry: geom(dy),
                    status,
                })
                .collect(),
            predictions: preds
                .iter()
                .map(|&(dy, status, confidence)| PredictedElement {
                    kind: ElementKind::LaneSegment,
                    geometry: geom(dy),
                    confidence,
                    status,
                })
                .collect(),
        }
    }

    const INS: ChangeStatus = ChangeStatus::primary(PrimaryLabel::Insertion);

    #[test]
    fn perfect_is_100_and_empty_is_0() {
        let f = frame(
            &[(0.0, INS), (10.0, INS)],
            &[(0.0, INS, 1.0), (10.0, INS, 1.0)],
        );
        let ap = ap_for_class(
            &[f],
            EvalClass::Insertion,
            ElementKind::LaneSegment,
            &LANE_THRESHOLDS,
        );
        assert_eq!(ap.unwrap(), Some(100.0));
        let f = frame(&[(0.0, INS)], &[]);
        let ap = ap_for_class(
            &[f],
            EvalClass::Insertion,
            ElementKind::LaneSegment,
            &LANE_THRESHOLDS,
        );
        assert_eq!(ap.unwrap(), Some(0.0));
    }

    #[test]
    fn no_ground_truth_is_undefined() {
        let f = frame(&[], &[(0.0, INS, 0.9)]);
        let ap = ap_for_class(
            &[f],
            EvalClass::Insertion,
            ElementKind::LaneSegment,
            &LANE_THRESHOLDS,
        );
        assert_eq!(ap.unwrap(), None);
    }

    #[test]
    fn mislabeled_prediction_cannot_match() {
        let del = ChangeStatus::primary(PrimaryLabel::Deletion);
        let f = frame(&[(0.0, INS)], &[(0.0, del, 1.0)]);
        let ap = ap_for_class(
            &[f],
            EvalClass::Insertion,
            ElementKind::LaneSegment,
            &LANE_THRESHOLDS,
        );
        assert_eq!(ap.unwrap(), Some(0.0));
    }

    #[test]
    fn threshold_dependence() {
        // 1.5 m offset matches at 2 and 3 m only
        let f = frame(&[(0.0, INS)], &[(1.5, INS, 0.8)]);
        let ap = ap_for_class(
            &[f],
            EvalClass::Insertion,
            ElementKind::LaneSegment,
            &LANE_THRESHOLDS,
        )
        .unwrap()
        .unwrap();
        assert!((ap - 200.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn envelope_takes_max_precision_to_the_right() {
        // ranks: FP, TP, TP with 2 gt -> precisions .5, .667 -> (2/3 + 2/3) / 2
        let ap = envelope_ap(&[false, true, true], 2);
        assert!((ap - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn bad_thresholds() {
        assert_eq!(
            ap_for_class(&[], EvalClass::Any, ElementKind::LaneSegment, &[2.0, 1.0]),
            Err(EvalError::InvalidThresholds)
        );
    }
}
