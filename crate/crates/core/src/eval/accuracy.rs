//! Frame-level change detection accuracy.

use serde::{Deserialize, Serialize};

use super::{EvalClass, FrameSample};

/// Predictions below this confidence do not count as detections.
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.5;

/// Balanced accuracy of one class, in percent. A side is `None` when no
/// frame has the corresponding ground-truth label; `macc` averages the
/// defined sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyScore {
    pub acc_pos: Option<f64>,
    pub acc_neg: Option<f64>,
    pub macc: Option<f64>,
}

/// `y_c` is set when any ground-truth element of the frame is in `class`,
/// `ŷ_c` when any prediction with confidence at least `conf_threshold` is.
pub fn frame_accuracy(
    frames: &[FrameSample],
    class: EvalClass,
    conf_threshold: f64,
) -> AccuracyScore {
    let (mut pos, mut pos_hit, mut neg, mut neg_hit) = (0usize, 0usize, 0usize, 0usize);
    for f in frames {
        let y = f.ground_truth.iter().any(|g| class.contains(&g.status));
        let y_hat = f
            .predictions
            .iter()
            .any(|p| p.confidence >= conf_threshold && class.contains(&p.status));
        if y {
            pos += 1;
            pos_hit += usize::from(y_hat);
        } else {
            neg += 1;
            neg_hit += usize::from(!y_hat);
        }
    }
    let pct = |hit: usize, n: usize| (n > 0).then(|| 100.0 * hit as f64 / n as f64);
    let acc_pos = pct(pos_hit, pos);
    let acc_neg = pct(neg_hit, neg);
    let defined: Vec<f64> = acc_pos.into_iter().chain(acc_neg).collect();
    let macc = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    AccuracyScore {
        acc_pos,
        acc_neg,
        macc,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{ChangeStatus, GroundTruthElement, PredictedElement, PrimaryLabel};
    use crate::geometry::{Point, Polyline2D};
    use crate::map::{ElementGeometry, ElementKind};

    fn geom() -> ElementGeometry {
        let line = |y: f64| Polyline2D::new(vec![Point::new(0.0, y), Point::new(5.0, y)]).unwrap();
        ElementGeometry {
            left: line(1.0),
            right: line(-1.0),
            centerline: line(0.0),
        }
    }

    fn frame(changed: bool, predicted: Option<f64>) -> FrameSample {
        let ins = ChangeStatus::primary(PrimaryLabel::Insertion);
        let gt_status = if changed {
            ins
        } else {
            ChangeStatus::UNCHANGED
        };
        FrameSample {
            frame_id: String::new(),
            ground_truth: vec![GroundTruthElement {
                kind: ElementKind::LaneSegment,
                geometry: geom(),
                status: gt_status,
            }],
            predictions: predicted
                .map(|confidence| PredictedElement {
                    kind: ElementKind::LaneSegment,
                    geometry: geom(),
                    confidence,
                    status: ins,
                })
                .into_iter()
                .collect(),
        }
    }

    #[test]
    fn always_change_model_on_balanced_mix() {
        let frames: Vec<_> = (0..10).map(|i| frame(i % 2 == 0, Some(0.9))).collect();
        let s = frame_accuracy(&frames, EvalClass::Insertion, 0.5);
        assert_eq!(
            (s.acc_pos, s.acc_neg, s.macc),
            (Some(100.0), Some(0.0), Some(50.0))
        );
    }

    #[test]
    fn low_confidence_is_not_a_detection() {
        let s = frame_accuracy(&[frame(true, Some(0.49))], EvalClass::Insertion, 0.5);
        assert_eq!((s.acc_pos, s.acc_neg, s.macc), (Some(0.0), None, Some(0.0)));
    }
}
