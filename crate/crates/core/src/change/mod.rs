//! Atomic changes between a prior map and its updated version.
//!
//! A [`ChangeSet`] is an order-free collection of [`AtomicChange`]s keyed by
//! target id and change slot, so two sets holding the same changes compare
//! equal no matter how they were built.

mod apply;
mod canonical;
mod codec;
mod diff;
mod labels;
mod macro_mod;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::ChangeError;
use crate::map::{ElementGeometry, ElementId, LaneMarkType, LaneType, MapElement, Side};

pub use apply::{apply_changeset, invert_changeset};
pub use canonical::{
    function_signature, validate_canonical, FunctionSignature, TurnClass, RULE_EXCLUSIVE,
    RULE_REPLACEMENT, RULE_REPRODUCES, RULE_REROUTE_FUNCTION, RULE_REROUTE_LOCATION,
    RULE_RIGHT_HAND, RULE_TOPOLOGY_GATE,
};
pub use codec::{changeset_from_json, changeset_to_json};
pub use diff::{diff_maps, GEOMETRY_SAMPLES, GEOMETRY_TOLERANCE};
pub use labels::{frame_labels, overlay_deletions, sub_labels, ChangeClass, FrameLabels, SubLabel};
pub use macro_mod::{
    classify_macro, AtomicColumn, MacroKind, MacroModification, MappingEntry, MappingMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectivityField {
    Successors,
    Predecessors,
    LeftNeighbor,
    RightNeighbor,
}

impl ConnectivityField {
    pub const ALL: [ConnectivityField; 4] = [
        ConnectivityField::Successors,
        ConnectivityField::Predecessors,
        ConnectivityField::LeftNeighbor,
        ConnectivityField::RightNeighbor,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConnectivityField::Successors => "successors",
            ConnectivityField::Predecessors => "predecessors",
            ConnectivityField::LeftNeighbor => "left_neighbor",
            ConnectivityField::RightNeighbor => "right_neighbor",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.as_str() == s)
    }

    /// Current value of this field on a lane segment. Neighbor fields yield
    /// zero or one id.
    pub fn read(self, lane: &crate::map::LaneSegment) -> Vec<ElementId> {
        match self {
            ConnectivityField::Successors => lane.successors.clone(),
            ConnectivityField::Predecessors => lane.predecessors.clone(),
            ConnectivityField::LeftNeighbor => lane.left_neighbor_id.into_iter().collect(),
            ConnectivityField::RightNeighbor => lane.right_neighbor_id.into_iter().collect(),
        }
    }

    fn write(self, lane: &mut crate::map::LaneSegment, ids: &[ElementId]) {
        match self {
            ConnectivityField::Successors => lane.successors = ids.to_vec(),
            ConnectivityField::Predecessors => lane.predecessors = ids.to_vec(),
            ConnectivityField::LeftNeighbor => lane.left_neighbor_id = ids.first().copied(),
            ConnectivityField::RightNeighbor => lane.right_neighbor_id = ids.first().copied(),
        }
        lane.normalize_links();
    }

    fn is_neighbor(self) -> bool {
        matches!(
            self,
            ConnectivityField::LeftNeighbor | ConnectivityField::RightNeighbor
        )
    }
}

/// Payload of one atomic change.
#[derive(Debug, Clone, PartialEq)]
pub enum ChangeKind {
    Geometry {
        before: ElementGeometry,
        after: ElementGeometry,
        /// Function-preserving reroute inside an intersection.
        reroute: bool,
    },
    Marking {
        side: Side,
        before: LaneMarkType,
        after: LaneMarkType,
    },
    TypeChange {
        before: LaneType,
        after: LaneType,
    },
    Connectivity {
        field: ConnectivityField,
        before: Vec<ElementId>,
        after: Vec<ElementId>,
    },
    Insertion {
        element: MapElement,
    },
    Deletion {
        element: MapElement,
    },
}

impl ChangeKind {
    pub fn key(&self) -> ChangeKey {
        match self {
            ChangeKind::Geometry { .. } => ChangeKey::Geometry,
            ChangeKind::Marking { side, .. } => ChangeKey::Marking(*side),
            ChangeKind::TypeChange { .. } => ChangeKey::Type,
            ChangeKind::Connectivity { field, .. } => ChangeKey::Connectivity(*field),
            ChangeKind::Insertion { .. } => ChangeKey::Insertion,
            ChangeKind::Deletion { .. } => ChangeKey::Deletion,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ChangeKind::Geometry { .. } => "geometry",
            ChangeKind::Marking { .. } => "marking",
            ChangeKind::TypeChange { .. } => "type",
            ChangeKind::Connectivity { .. } => "connectivity",
            ChangeKind::Insertion { .. } => "insertion",
            ChangeKind::Deletion { .. } => "deletion",
        }
    }

    /// Same change seen from the other side.
    pub fn inverted(&self) -> ChangeKind {
        match self.clone() {
            ChangeKind::Geometry {
                before,
                after,
                reroute,
            } => ChangeKind::Geometry {
                before: after,
                after: before,
                reroute,
            },
            ChangeKind::Marking {
                side,
                before,
                after,
            } => ChangeKind::Marking {
                side,
                before: after,
                after: before,
            },
            ChangeKind::TypeChange { before, after } => ChangeKind::TypeChange {
                before: after,
                after: before,
            },
            ChangeKind::Connectivity {
                field,
                before,
                after,
            } => ChangeKind::Connectivity {
                field,
                before: after,
                after: before,
            },
            ChangeKind::Insertion { element } => ChangeKind::Deletion { element },
            ChangeKind::Deletion { element } => ChangeKind::Insertion { element },
        }
    }

    fn is_noop(&self) -> bool {
        match self {
            ChangeKind::Geometry { before, after, .. } => before == after,
            ChangeKind::Marking { before, after, .. } => before == after,
            ChangeKind::TypeChange { before, after } => before == after,
            ChangeKind::Connectivity { before, after, .. } => {
                let a: BTreeSet<_> = before.iter().collect();
                let b: BTreeSet<_> = after.iter().collect();
                a == b
            }
            ChangeKind::Insertion { .. } | ChangeKind::Deletion { .. } => false,
        }
    }
}

/// Slot a change occupies on its target. At most one change per slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChangeKey {
    Geometry,
    Marking(Side),
    Type,
    Connectivity(ConnectivityField),
    Insertion,
    Deletion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomicChange {
    pub target_id: ElementId,
    pub kind: ChangeKind,
}

impl AtomicChange {
    pub fn new(target_id: ElementId, kind: ChangeKind) -> Self {
        Self { target_id, kind }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChangeSet {
    pub base_scene_id: String,
    changes: BTreeMap<(ElementId, ChangeKey), ChangeKind>,
}

impl ChangeSet {
    pub fn new(base_scene_id: impl Into<String>) -> Self {
        Self {
            base_scene_id: base_scene_id.into(),
            changes: BTreeMap::new(),
        }
    }

    /// Build a set from changes in any order.
    pub fn from_changes(
        base_scene_id: impl Into<String>,
        changes: impl IntoIterator<Item = AtomicChange>,
    ) -> Result<Self, ChangeError> {
        let mut cs = ChangeSet::new(base_scene_id);
        for c in changes {
            cs.insert(c)?;
        }
        Ok(cs)
    }

    /// Add a change, enforcing one change per slot, `before != after` and
    /// exclusivity of insertions and deletions.
    pub fn insert(&mut self, change: AtomicChange) -> Result<(), ChangeError> {
        let id = change.target_id;
        let conflict = |reason: &str| ChangeError::ConflictingChange {
            id,
            reason: reason.to_string(),
        };
        if change.kind.is_noop() {
            return Err(conflict("before and after are equal"));
        }
        if let ChangeKind::Insertion { element } | ChangeKind::Deletion { element } = &change.kind {
            if element.id() != id {
                return Err(conflict("payload id differs from target id"));
            }
        }
        if let ChangeKind::Connectivity { field, after, .. } = &change.kind {
            if field.is_neighbor() && after.len() > 1 {
                return Err(conflict("a neighbor field holds at most one id"));
            }
        }
        let key = change.kind.key();
        if self.changes.contains_key(&(id, key)) {
            return Err(conflict("duplicate change of the same kind"));
        }
        let existing: Vec<ChangeKey> = self.keys_for(id).collect();
        let exclusive = |k: &ChangeKey| matches!(k, ChangeKey::Insertion | ChangeKey::Deletion);
        if !existing.is_empty() && (exclusive(&key) || existing.iter().any(exclusive)) {
            return Err(conflict(
                "insertions and deletions cannot be combined with other changes",
            ));
        }
        self.changes.insert((id, key), change.kind);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.changes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ElementId, &ChangeKind)> + '_ {
        self.changes.iter().map(|((id, _), k)| (*id, k))
    }

    pub fn to_changes(&self) -> Vec<AtomicChange> {
        self.iter()
            .map(|(id, k)| AtomicChange::new(id, k.clone()))
            .collect()
    }

    pub fn get(&self, id: ElementId, key: ChangeKey) -> Option<&ChangeKind> {
        self.changes.get(&(id, key))
    }

    pub fn keys_for(&self, id: ElementId) -> impl Iterator<Item = ChangeKey> + '_ {
        self.changes
            .range((id, ChangeKey::Geometry)..=(id, ChangeKey::Deletion))
            .map(|((_, k), _)| *k)
    }

    pub fn changes_for(&self, id: ElementId) -> impl Iterator<Item = &ChangeKind> + '_ {
        self.changes
            .range((id, ChangeKey::Geometry)..=(id, ChangeKey::Deletion))
            .map(|(_, k)| k)
    }

    pub fn targets(&self) -> BTreeSet<ElementId> {
        self.changes.keys().map(|(id, _)| *id).collect()
    }

    pub fn insertions(&self) -> impl Iterator<Item = &MapElement> + '_ {
        self.changes.values().filter_map(|k| match k {
            ChangeKind::Insertion { element } => Some(element),
            _ => None,
        })
    }

    pub fn deletions(&self) -> impl Iterator<Item = &MapElement> + '_ {
        self.changes.values().filter_map(|k| match k {
            ChangeKind::Deletion { element } => Some(element),
            _ => None,
        })
    }

    /// Count of changes per kind name.
    pub fn kind_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut out = BTreeMap::new();
        for k in self.changes.values() {
            *out.entry(k.name()).or_insert(0) += 1;
        }
        out
    }
}
