//! Aggregated evaluation report.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::accuracy::{frame_accuracy, DEFAULT_CONFIDENCE_THRESHOLD};
use super::ap::{ap_for_class, CROSSING_THRESHOLDS, LANE_THRESHOLDS};
use super::{EvalClass, FrameSample};
use crate::error::EvalError;
use crate::map::ElementKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub lane_thresholds: Vec<f64>,
    pub crossing_thresholds: Vec<f64>,
    pub conf_threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            lane_thresholds: LANE_THRESHOLDS.to_vec(),
            crossing_thresholds: CROSSING_THRESHOLDS.to_vec(),
            conf_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
        }
    }
}

/// Scores of one change class, in percent. `None` marks undefined values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: EvalClass,
    #[serde(default)]
    pub ap_ls: Option<f64>,
    #[serde(default)]
    pub ap_pc: Option<f64>,
    #[serde(default)]
    pub map: Option<f64>,
    #[serde(default)]
    pub acc_pos: Option<f64>,
    #[serde(default)]
    pub acc_neg: Option<f64>,
    #[serde(default)]
    pub macc: Option<f64>,
}

impl ClassReport {
    fn new(class: EvalClass) -> Self {
        Self {
            class,
            ap_ls: None,
            ap_pc: None,
            map: None,
            acc_pos: None,
            acc_neg: None,
            macc: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: Vec<ClassReport>,
    /// Plain mAP, computed without change gating.
    #[serde(default)]
    pub map: Option<f64>,
    #[serde(default)]
    pub mapc: Option<f64>,
    #[serde(default)]
    pub macc: Option<f64>,
    /// Human-readable notes on undefined values.
    #[serde(default)]
    pub notes: Vec<String>,
}

fn mean(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.into_iter().flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl EvalReport {
    fn empty(classes: &[EvalClass]) -> Self {
        Self {
            classes: classes.iter().map(|&c| ClassReport::new(c)).collect(),
            map: None,
            mapc: None,
            macc: None,
            notes: Vec::new(),
        }
    }

    pub fn class(&self, c: EvalClass) -> Option<&ClassReport> {
        self.classes.iter().find(|r| r.class == c)
    }

    /// Aligned text table: one row per class, then the aggregates.
    pub fn to_table(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "--".to_string(), |x| format!("{x:.1}"));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<8} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}",
            "class", "AP_ls", "AP_pc", "mAP_c", "Acc+", "Acc-", "mAcc_c"
        );
        for r in &self.classes {
            let _ = writeln!(
                out,
                "{:<8} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}",
                r.class.short(),
                cell(r.ap_ls),
                cell(r.ap_pc),
                cell(r.map),
                cell(r.acc_pos),
                cell(r.acc_neg),
                cell(r.macc)
            );
        }
        let _ = writeln!(
            out,
            "mAP {}  mAPC {}  mACC {}",
            cell(self.map),
            cell(self.mapc),
            cell(self.macc)
        );
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }
}

fn class_map(
    frames: &[FrameSample],
    class: EvalClass,
    cfg: &EvalConfig,
) -> Result<[Option<f64>; 3], EvalError> {
    let ls = ap_for_class(
        frames,
        class,
        ElementKind::LaneSegment,
        &cfg.lane_thresholds,
    )?;
    let pc = ap_for_class(
        frames,
        class,
        ElementKind::PedestrianCrossing,
        &cfg.crossing_thresholds,
    )?;
    Ok([ls, pc, mean([ls, pc])])
}

/// AP side of the report: per-class AP for both kinds, `mAP_c`, mAPC over
/// `classes` and plain mAP. A kind without ground truth of a class is left
/// out of that class's mean.
pub fn evaluate_mapc(
    frames: &[FrameSample],
    classes: &[EvalClass],
    cfg: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    if classes.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut report = EvalReport::empty(classes);
    for r in &mut report.classes {
        let [ls, pc, map] = class_map(frames, r.class, cfg)?;
        (r.ap_ls, r.ap_pc, r.map) = (ls, pc, map);
        if map.is_none() {
            report.notes.push(format!(
                "{}: no ground truth, excluded from mAPC",
                r.class.as_str()
            ));
        }
    }
    report.mapc = mean(report.classes.iter().map(|r| r.map));
    report.map = class_map(frames, EvalClass::Any, cfg)?[2];
    Ok(report)
}

/// Accuracy side of the report. Classes without a frame-level meaning
/// (unchanged, any) are skipped.
pub fn evaluate_macc(
    frames: &[FrameSample],
    classes: &[EvalClass],
    conf_threshold: f64,
) -> Result<EvalReport, EvalError> {
    if classes.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if !(0.0..=1.0).contains(&conf_threshold) {
        return Err(EvalError::InvalidConfidence(conf_threshold));
    }
    let mut report = EvalReport::empty(classes);
    for r in report.classes.iter_mut().filter(|r| r.class.has_accuracy()) {
        let s = frame_accuracy(frames, r.class, conf_threshold);
        (r.acc_pos, r.acc_neg, r.macc) = (s.acc_pos, s.acc_neg, s.macc);
        for (side, v) in [("positive", s.acc_pos), ("negative", s.acc_neg)] {
            if v.is_none() {
                report
                    .notes
                    .push(format!("{}: no {side} frames", r.class.as_str()));
            }
        }
    }
    report.macc = mean(report.classes.iter().map(|r| r.macc));
    Ok(report)
}

/// Both sides of the report.
pub fn evaluate(
    frames: &[FrameSample],
    classes: &[EvalClass],
    cfg: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    for f in frames {
        f.validate()?;
    }
    let mut report = evaluate_mapc(frames, classes, cfg)?;
    let acc = evaluate_macc(frames, classes, cfg.conf_threshold)?;
    for (r, a) in report.classes.iter_mut().zip(acc.classes) {
        (r.acc_pos, r.acc_neg, r.macc) = (a.acc_pos, a.acc_neg, a.macc);
    }
    report.macc = acc.macc;
    report.notes.extend(acc.notes);
    Ok(report)
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
            left: line(2.0),
            right: line(-2.0),
            centerline: line(0.0),
        }
    }

    fn perfect_frames() -> Vec<FrameSample> {
        let statuses = [
            ChangeStatus::primary(PrimaryLabel::Insertion),
            ChangeStatus::primary(PrimaryLabel::Deletion),
            ChangeStatus::other(true, true),
            ChangeStatus::UNCHANGED,
        ];
        let mut frames = Vec::new();
        for (i, s) in statuses.iter().enumerate() {
            for kind in [ElementKind::LaneSegment, ElementKind::PedestrianCrossing] {
                let gt = GroundTruthElement {
                    kind,
                    geometry: geom(10.0 * i as f64),
                    status: *s,
                };
                frames.push(FrameSample {
                    frame_id: format!("{i}-{}", kind.as_str()),
                    predictions: vec![PredictedElement {
                        kind,
                        geometry: gt.geometry.clone(),
                        confidence: 1.0,
                        status: *s,
                    }],
                    ground_truth: vec![gt],
                });
            }
        }
        frames
    }

    #[test]
    fn perfect_predictions_score_100() {
        let r = evaluate(&perfect_frames(), &EvalClass::FULL, &EvalConfig::default()).unwrap();
        assert_eq!(r.mapc, Some(100.0));
        assert_eq!(r.macc, Some(100.0));
        assert_eq!(r.map, Some(100.0));
    }

    #[test]
    fn empty_predictions() {
        let mut frames = perfect_frames();
        frames.iter_mut().for_each(|f| f.predictions.clear());
        let r = evaluate(&frames, &EvalClass::FULL, &EvalConfig::default()).unwrap();
        for c in &r.classes {
            assert_eq!(c.ap_ls, Some(0.0));
            assert_eq!(c.acc_pos, Some(0.0));
            assert_eq!(c.acc_neg, Some(100.0));
        }
    }

    #[test]
    fn binary_skips_unchanged_accuracy() {
        let r = evaluate(
            &perfect_frames(),
            &EvalClass::BINARY,
            &EvalConfig::default(),
        )
        .unwrap();
        assert_eq!(r.class(EvalClass::Unchanged).unwrap().macc, None);
        assert_eq!(r.macc, r.class(EvalClass::Changed).unwrap().macc);
        assert!(r.to_table().contains("¬c"));
    }

    #[test]
    fn report_json_roundtrip() {
        let r = evaluate(&perfect_frames(), &EvalClass::FULL, &EvalConfig::default()).unwrap();
        let back: EvalReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
