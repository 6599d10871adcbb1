//! Macro-modifications derived from atomic changes via the mapping matrix.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{ChangeKind, ChangeSet};
use crate::error::ChangeError;
use crate::map::{build_lane_graph, ElementId, ElementKind, MapElement, MapScene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MacroKind {
    Shape,
    Appearance,
    Function,
    LaneGraph,
    LaneNumber,
}

impl MacroKind {
    pub const ALL: [MacroKind; 5] = [
        MacroKind::Shape,
        MacroKind::Appearance,
        MacroKind::Function,
        MacroKind::LaneGraph,
        MacroKind::LaneNumber,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MacroKind::Shape => "shape",
            MacroKind::Appearance => "appearance",
            MacroKind::Function => "function",
            MacroKind::LaneGraph => "lane_graph",
            MacroKind::LaneNumber => "lane_number",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MacroModification {
    pub kind: MacroKind,
    /// Non-zero exactly for [`MacroKind::LaneNumber`].
    pub lane_number_delta: i64,
}

impl MacroModification {
    pub fn new(kind: MacroKind) -> Self {
        Self {
            kind,
            lane_number_delta: 0,
        }
    }
}

impl fmt::Display for MacroModification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.kind == MacroKind::LaneNumber {
            write!(f, "lane_number({:+})", self.lane_number_delta)
        } else {
            f.write_str(self.kind.as_str())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomicColumn {
    Geo,
    Mark,
    Type,
    Ins,
    Del,
}

impl AtomicColumn {
    pub const ALL: [AtomicColumn; 5] = [
        AtomicColumn::Geo,
        AtomicColumn::Mark,
        AtomicColumn::Type,
        AtomicColumn::Ins,
        AtomicColumn::Del,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingEntry {
    Contributes,
    /// Contributes only when the lane graph topology changes.
    IfTopologyChange,
    No,
    Plus,
    Minus,
}

/// Which atomic change kinds produce which macro-modification.
pub struct MappingMatrix;

impl MappingMatrix {
    const TABLE: [[MappingEntry; 5]; 5] = {
        use MappingEntry::*;
        [
            // geo          mark         type         ins               del
            [Contributes, No, No, IfTopologyChange, IfTopologyChange], // shape
            [No, Contributes, No, IfTopologyChange, IfTopologyChange], // appearance
            [No, No, Contributes, IfTopologyChange, IfTopologyChange], // function
            [No, No, No, Contributes, Contributes],                    // lane graph
            [No, No, No, Plus, Minus],                                 // lane number
        ]
    };

    pub fn entry(row: MacroKind, col: AtomicColumn) -> MappingEntry {
        Self::TABLE[row as usize][col as usize]
    }
}

/// Pair deleted and inserted intersection segments that share a persisting
/// predecessor or successor. Such a pair reroutes a connection without
/// changing the lane count.
fn reroute_pairs(
    deleted: &[&MapElement],
    inserted: &[&MapElement],
    persisting: &BTreeSet<ElementId>,
) -> usize {
    let links = |e: &MapElement| -> Option<(BTreeSet<ElementId>, BTreeSet<ElementId>)> {
        let MapElement::LaneSegment(l) = e else {
            return None;
        };
        if !l.is_intersection {
            return None;
        }
        let keep = |ids: &[ElementId]| {
            ids.iter()
                .copied()
                .filter(|i| persisting.contains(i))
                .collect()
        };
        Some((keep(&l.predecessors), keep(&l.successors)))
    };
    let mut used = vec![false; inserted.len()];
    let mut pairs = 0;
    for d in deleted {
        let Some((dp, ds)) = links(d) else { continue };
        for (k, i) in inserted.iter().enumerate() {
            if used[k] {
                continue;
            }
            let Some((ip, is)) = links(i) else { continue };
            if !dp.is_disjoint(&ip) || !ds.is_disjoint(&is) {
                used[k] = true;
                pairs += 1;
                break;
            }
        }
    }
    pairs
}

/// Macro-modifications produced by `cs`, which should be the canonical diff
/// of `prior` and `gt`.
///
/// Only lane segments form the lane graph, so insertions and deletions of
/// pedestrian crossings produce no macro-modification. Connectivity edits
/// contribute to the lane-graph row when the graph shape changes.
pub fn classify_macro(
    cs: &ChangeSet,
    prior: &MapScene,
    gt: &MapScene,
) -> Result<BTreeSet<MacroModification>, ChangeError> {
    for id in cs.targets() {
        if !prior.contains(id) && !gt.contains(id) {
            return Err(ChangeError::InconsistentInput(id));
        }
    }

    let topology_changed = build_lane_graph(prior).signature() != build_lane_graph(gt).signature();
    let is_lane = |e: &&MapElement| e.kind() == ElementKind::LaneSegment;
    let deleted: Vec<&MapElement> = cs.deletions().filter(is_lane).collect();
    let inserted: Vec<&MapElement> = cs.insertions().filter(is_lane).collect();

    let mut present = BTreeSet::new();
    let mut connectivity = false;
    for (_, kind) in cs.iter() {
        match kind {
            ChangeKind::Geometry { .. } => {
                present.insert(AtomicColumn::Geo);
            }
            ChangeKind::Marking { .. } => {
                present.insert(AtomicColumn::Mark);
            }
            ChangeKind::TypeChange { .. } => {
                present.insert(AtomicColumn::Type);
            }
            ChangeKind::Connectivity { .. } => connectivity = true,
            ChangeKind::Insertion { .. } | ChangeKind::Deletion { .. } => {}
        }
    }
    if !inserted.is_empty() {
        present.insert(AtomicColumn::Ins);
    }
    if !deleted.is_empty() {
        present.insert(AtomicColumn::Del);
    }

    let mut out = BTreeSet::new();
    for row in [
        MacroKind::Shape,
        MacroKind::Appearance,
        MacroKind::Function,
        MacroKind::LaneGraph,
    ] {
        let fires = present
            .iter()
            .any(|&col| match MappingMatrix::entry(row, col) {
                MappingEntry::Contributes => {
                    // insertions and deletions always alter the lane graph; the
                    // signature comparison is the check for it
                    !matches!(col, AtomicColumn::Ins | AtomicColumn::Del) || topology_changed
                }
                MappingEntry::IfTopologyChange => topology_changed,
                _ => false,
            });
        if fires || (row == MacroKind::LaneGraph && connectivity && topology_changed) {
            out.insert(MacroModification::new(row));
        }
    }

    let persisting: BTreeSet<ElementId> = prior.ids().intersection(&gt.ids()).copied().collect();
    let pairs = reroute_pairs(&deleted, &inserted, &persisting) as i64;
    let sign = |col| match MappingMatrix::entry(MacroKind::LaneNumber, col) {
        MappingEntry::Plus => 1,
        MappingEntry::Minus => -1,
        _ => 0,
    };
    let delta = sign(AtomicColumn::Ins) * (inserted.len() as i64 - pairs)
        + sign(AtomicColumn::Del) * (deleted.len() as i64 - pairs);
    if delta != 0 {
        out.insert(MacroModification {
            kind: MacroKind::LaneNumber,
            lane_number_delta: delta,
        });
    }
    Ok(out)
}
