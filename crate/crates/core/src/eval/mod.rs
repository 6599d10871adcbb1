//! Change-aware evaluation: change-gated average precision (mAPC) and
//! frame-level change detection accuracy (mACC).

mod accuracy;
mod ap;
mod distance;
mod report;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::geometry::Point;
use crate::map::{ChangeTag, ElementGeometry, ElementKind, MapScene};

pub use accuracy::{frame_accuracy, AccuracyScore, DEFAULT_CONFIDENCE_THRESHOLD};
pub use ap::{ap_for_class, CROSSING_THRESHOLDS, LANE_THRESHOLDS};
pub use distance::{chamfer, element_distance, frechet, lane_distance, SAMPLE_POINTS};
pub use report::{evaluate, evaluate_macc, evaluate_mapc, ClassReport, EvalConfig, EvalReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimaryLabel {
    NoChange,
    Insertion,
    Deletion,
    Other,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SecondaryFlags {
    #[serde(default)]
    pub geo: bool,
    #[serde(default)]
    pub mark: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChangeStatus {
    pub primary: PrimaryLabel,
    #[serde(default)]
    pub secondary: SecondaryFlags,
}

impl ChangeStatus {
    pub const UNCHANGED: ChangeStatus = ChangeStatus::primary(PrimaryLabel::NoChange);

    pub const fn primary(primary: PrimaryLabel) -> Self {
        Self {
            primary,
            secondary: SecondaryFlags {
                geo: false,
                mark: false,
            },
        }
    }

    pub const fn other(geo: bool, mark: bool) -> Self {
        Self {
            primary: PrimaryLabel::Other,
            secondary: SecondaryFlags { geo, mark },
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.primary == PrimaryLabel::Other || self.secondary == SecondaryFlags::default()
    }

    /// Status implied by an element's change history. Connectivity edits
    /// alone leave an element unchanged.
    pub fn from_tags(tags: &BTreeSet<ChangeTag>) -> Self {
        if tags.contains(&ChangeTag::Insertion) {
            return Self::primary(PrimaryLabel::Insertion);
        }
        if tags.contains(&ChangeTag::Deletion) {
            return Self::primary(PrimaryLabel::Deletion);
        }
        let geo = tags.contains(&ChangeTag::Geometry) || tags.contains(&ChangeTag::Reroute);
        let mark = tags.contains(&ChangeTag::Marking);
        if geo || mark || tags.contains(&ChangeTag::Type) {
            Self::other(geo, mark)
        } else {
            Self::UNCHANGED
        }
    }
}

/// Change classes an evaluation can be run over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalClass {
    Unchanged,
    Changed,
    Insertion,
    Deletion,
    Geometry,
    Marking,
    /// Every element regardless of change status; yields plain mAP.
    Any,
}

impl EvalClass {
    pub const BINARY: [EvalClass; 2] = [EvalClass::Unchanged, EvalClass::Changed];
    pub const FULL: [EvalClass; 4] = [
        EvalClass::Insertion,
        EvalClass::Deletion,
        EvalClass::Geometry,
        EvalClass::Marking,
    ];

    pub fn contains(self, s: &ChangeStatus) -> bool {
        match self {
            EvalClass::Unchanged => s.primary == PrimaryLabel::NoChange,
            EvalClass::Changed => s.primary != PrimaryLabel::NoChange,
            EvalClass::Insertion => s.primary == PrimaryLabel::Insertion,
            EvalClass::Deletion => s.primary == PrimaryLabel::Deletion,
            EvalClass::Geometry => s.primary == PrimaryLabel::Other && s.secondary.geo,
            EvalClass::Marking => s.primary == PrimaryLabel::Other && s.secondary.mark,
            EvalClass::Any => true,
        }
    }

    /// Whether frame-level accuracy is defined for the class. Detecting
    /// "no change" or "anything" says nothing about change detection.
    pub fn has_accuracy(self) -> bool {
        !matches!(self, EvalClass::Unchanged | EvalClass::Any)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EvalClass::Unchanged => "unchanged",
            EvalClass::Changed => "changed",
            EvalClass::Insertion => "insertion",
            EvalClass::Deletion => "deletion",
            EvalClass::Geometry => "geometry",
            EvalClass::Marking => "marking",
            EvalClass::Any => "any",
        }
    }

    /// Short column header.
    pub fn short(self) -> &'static str {
        match self {
            EvalClass::Unchanged => "¬c",
            EvalClass::Changed => "c",
            EvalClass::Insertion => "ins",
            EvalClass::Deletion => "del",
            EvalClass::Geometry => "geo",
            EvalClass::Marking => "mark",
            EvalClass::Any => "any",
        }
    }

    /// `binary`, `full`, or a comma-separated list of class names.
    pub fn parse_set(s: &str) -> Option<Vec<EvalClass>> {
        match s {
            "binary" => return Some(Self::BINARY.to_vec()),
            "full" => return Some(Self::FULL.to_vec()),
            _ => {}
        }
        let all = [
            EvalClass::Unchanged,
            EvalClass::Changed,
            EvalClass::Insertion,
            EvalClass::Deletion,
            EvalClass::Geometry,
            EvalClass::Marking,
            EvalClass::Any,
        ];
        let out: Option<Vec<_>> = s
            .split(',')
            .map(|t| all.into_iter().find(|c| c.as_str() == t.trim()))
            .collect();
        out.filter(|v| !v.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedElement {
    pub kind: ElementKind,
    pub geometry: ElementGeometry,
    pub confidence: f64,
    #[serde(flatten)]
    pub status: ChangeStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthElement {
    pub kind: ElementKind,
    pub geometry: ElementGeometry,
    #[serde(flatten)]
    pub status: ChangeStatus,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameSample {
    pub frame_id: String,
    #[serde(default)]
    pub predictions: Vec<PredictedElement>,
    #[serde(default)]
    pub ground_truth: Vec<GroundTruthElement>,
}

impl FrameSample {
    /// Ground truth of a map patch, with statuses read from element history.
    pub fn from_patch(frame_id: impl Into<String>, patch: &MapScene) -> Self {
        let ground_truth = patch
            .elements()
            .map(|e| GroundTruthElement {
                kind: e.kind(),
                geometry: e.geometry().clone(),
                status: ChangeStatus::from_tags(&e.history().tags()),
            })
            .collect();
        Self {
            frame_id: frame_id.into(),
            predictions: Vec::new(),
            ground_truth,
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        for p in &self.predictions {
            if !(0.0..=1.0).contains(&p.confidence) {
                return Err(EvalError::InvalidConfidence(p.confidence));
            }
            if !p.status.is_consistent() {
                return Err(EvalError::InvalidSecondary);
            }
        }
        if self.ground_truth.iter().any(|g| !g.status.is_consistent()) {
            return Err(EvalError::InvalidSecondary);
        }
        Ok(())
    }
}

/// Element geometry resampled for scoring.
#[derive(Debug, Clone)]
pub(crate) struct Sampled {
    pub boundaries: Vec<Point>,
    pub centerline: Vec<Point>,
}

impl Sampled {
    pub fn new(g: &ElementGeometry, frame: &str) -> Result<Self, EvalError> {
        let rs = |p: &crate::geometry::Polyline2D| {
            p.resample(SAMPLE_POINTS)
                .map(|r| r.points().to_vec())
                .map_err(|source| EvalError::Geometry {
                    frame: frame.to_string(),
                    source,
                })
        };
        let mut boundaries = rs(&g.left)?;
        boundaries.extend(rs(&g.right)?);
        Ok(Self {
            boundaries,
            centerline: rs(&g.centerline)?,
        })
    }
}
