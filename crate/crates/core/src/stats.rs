//! Change annotation statistics at scene, frame and element level.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::change::{apply_changeset, overlay_deletions, ChangeSet};
use crate::error::ChangeError;
use crate::map::{crop_patch, ChangeTag, EgoPose, ElementId, ElementKind, MapScene};

/// Splits listed first, in this order, even when empty.
pub const DEFAULT_SPLITS: [&str; 3] = ["train", "val", "test"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StatsCategory {
    Total,
    Changed,
    LaneGeometry,
    LaneMark,
    LaneInsertion,
    LaneDeletion,
    /// Function-preserving reroutes inside intersections.
    LaneTopology,
    LaneType,
    CrossingGeometry,
    CrossingInsertion,
    CrossingDeletion,
}

impl StatsCategory {
    pub const ALL: [StatsCategory; 11] = [
        StatsCategory::Total,
        StatsCategory::Changed,
        StatsCategory::LaneGeometry,
        StatsCategory::LaneMark,
        StatsCategory::LaneInsertion,
        StatsCategory::LaneDeletion,
        StatsCategory::LaneTopology,
        StatsCategory::LaneType,
        StatsCategory::CrossingGeometry,
        StatsCategory::CrossingInsertion,
        StatsCategory::CrossingDeletion,
    ];

    pub fn label(self) -> &'static str {
        match self {
            StatsCategory::Total => "total",
            StatsCategory::Changed => "of which changed",
            StatsCategory::LaneGeometry => "ls geometry",
            StatsCategory::LaneMark => "ls mark",
            StatsCategory::LaneInsertion => "ls insertion",
            StatsCategory::LaneDeletion => "ls deletion",
            StatsCategory::LaneTopology => "ls topology",
            StatsCategory::LaneType => "ls type",
            StatsCategory::CrossingGeometry => "pc geometry",
            StatsCategory::CrossingInsertion => "pc insertion",
            StatsCategory::CrossingDeletion => "pc deletion",
        }
    }

    /// Whether an element of `kind` with history `tags` counts here.
    /// Connectivity edits alone do not make an element changed.
    pub fn matches(self, kind: ElementKind, tags: &BTreeSet<ChangeTag>) -> bool {
        let ls = kind == ElementKind::LaneSegment;
        let has = |t| tags.contains(&t);
        match self {
            StatsCategory::Total => true,
            StatsCategory::Changed => tags.iter().any(|&t| t != ChangeTag::Connectivity),
            StatsCategory::LaneGeometry => ls && has(ChangeTag::Geometry),
            StatsCategory::LaneMark => ls && has(ChangeTag::Marking),
            StatsCategory::LaneInsertion => ls && has(ChangeTag::Insertion),
            StatsCategory::LaneDeletion => ls && has(ChangeTag::Deletion),
            StatsCategory::LaneTopology => ls && has(ChangeTag::Reroute),
            StatsCategory::LaneType => ls && has(ChangeTag::Type),
            StatsCategory::CrossingGeometry => !ls && has(ChangeTag::Geometry),
            StatsCategory::CrossingInsertion => !ls && has(ChangeTag::Insertion),
            StatsCategory::CrossingDeletion => !ls && has(ChangeTag::Deletion),
        }
    }
}

/// One annotated scene: ground truth with change history, deleted
/// elements overlaid, and the poses that define its frames.
#[derive(Debug, Clone)]
pub struct SceneRecord {
    pub split: String,
    pub annotated: MapScene,
    pub poses: Vec<EgoPose>,
}

impl SceneRecord {
    /// Annotate by applying `cs` to `prior`.
    pub fn from_change(
        split: impl Into<String>,
        prior: &MapScene,
        cs: &ChangeSet,
        poses: Vec<EgoPose>,
    ) -> Result<Self, ChangeError> {
        let gt = apply_changeset(prior, cs)?;
        Ok(Self {
            split: split.into(),
            annotated: overlay_deletions(&gt, cs),
            poses,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub global: usize,
    pub frame: usize,
    pub element: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StatsTable {
    pub splits: Vec<String>,
    /// Category -> split -> counts.
    pub rows: BTreeMap<StatsCategory, BTreeMap<String, Counts>>,
}

impl StatsTable {
    pub fn get(&self, c: StatsCategory, split: &str) -> Counts {
        self.rows
            .get(&c)
            .and_then(|r| r.get(split))
            .copied()
            .unwrap_or_default()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<18}", "category");
        for s in &self.splits {
            let _ = write!(out, " | {s:^26}");
        }
        out.push('\n');
        let _ = write!(out, "{:<18}", "");
        for _ in &self.splits {
            let _ = write!(out, " | {:>6} {:>8} {:>10}", "global", "frame", "element");
        }
        out.push('\n');
        for c in StatsCategory::ALL {
            let _ = write!(out, "{:<18}", c.label());
            for s in &self.splits {
                let n = self.get(c, s);
                let _ = write!(out, " | {:>6} {:>8} {:>10}", n.global, n.frame, n.element);
            }
            out.push('\n');
        }
        out
    }
}

/// Count, per split and category, the scenes, the frames (patches of
/// `extent` around each pose) and the elements with at least one element of
/// that category. An element is in a frame when the crop keeps it.
pub fn compute_stats(records: &[SceneRecord], extent: f64) -> StatsTable {
    let mut splits: Vec<String> = DEFAULT_SPLITS.iter().map(|s| s.to_string()).collect();
    for r in records {
        if !splits.contains(&r.split) {
            splits.push(r.split.clone());
        }
    }
    let mut rows: BTreeMap<StatsCategory, BTreeMap<String, Counts>> = StatsCategory::ALL
        .iter()
        .map(|&c| {
            (
                c,
                splits
                    .iter()
                    .map(|s| (s.clone(), Counts::default()))
                    .collect(),
            )
        })
        .collect();

    for r in records {
        let members: BTreeMap<StatsCategory, BTreeSet<ElementId>> = StatsCategory::ALL
            .iter()
            .map(|&c| {
                let ids = r
                    .annotated
                    .elements()
                    .filter(|e| c.matches(e.kind(), &e.history().tags()))
                    .map(|e| e.id())
                    .collect();
                (c, ids)
            })
            .collect();
        let frames: Vec<BTreeSet<ElementId>> = r
            .poses
            .iter()
            .map(|p| crop_patch(&r.annotated, p, extent).scene.ids())
            .collect();
        for (c, ids) in &members {
            let n = rows.get_mut(c).unwrap().get_mut(&r.split).unwrap();
            n.element += ids.len();
            if *c == StatsCategory::Total {
                // every scene and frame counts, even empty ones
                n.global += 1;
                n.frame += frames.len();
            } else {
                n.global += usize::from(!ids.is_empty());
                n.frame += frames.iter().filter(|f| !f.is_disjoint(ids)).count();
            }
        }
    }
    StatsTable { splits, rows }
}
