use super::canonical::function_signature;
use super::{AtomicChange, ChangeKind, ChangeSet, ConnectivityField};
use crate::error::ChangeError;
use crate::map::{ElementGeometry, ElementId, LaneSegment, MapScene, Side};

/// Geometries closer than this (max pointwise deviation, metres) are equal.
pub const GEOMETRY_TOLERANCE: f64 = 1e-3;
/// Resampling density used for geometry comparison.
pub const GEOMETRY_SAMPLES: usize = 10;

pub(crate) fn geometry_changed(a: &ElementGeometry, b: &ElementGeometry) -> bool {
    a != b && a.max_deviation(b, GEOMETRY_SAMPLES) > GEOMETRY_TOLERANCE
}

fn sorted(mut v: Vec<ElementId>) -> Vec<ElementId> {
    v.sort_unstable();
    v.dedup();
    v
}

/// Diff two scenes that share an id convention into a canonical change set.
///
/// Ids present in both scenes yield field-level edits, ids only in `gt`
/// insertions and ids only in `prior` deletions. Change bookkeeping
/// (`is_modified`, `change_hist`) is ignored, and payloads are stored without
/// it. An id whose element kind differs between the scenes cannot be
/// expressed and yields [`ChangeError::ConflictingChange`].
pub fn diff_maps(prior: &MapScene, gt: &MapScene) -> Result<ChangeSet, ChangeError> {
    let mut cs = ChangeSet::new(prior.scene_id.clone());

    for (id, p) in &prior.lane_segments {
        match gt.lane_segments.get(id) {
            Some(g) => lane_changes(prior, gt, p, g, &mut cs)?,
            None if gt.pedestrian_crossings.contains_key(id) => return Err(kind_changed(*id)),
            None => cs.insert(AtomicChange::new(
                *id,
                ChangeKind::Deletion {
                    element: prior.element(*id).unwrap().without_history(),
                },
            ))?,
        }
    }
    for (id, p) in &prior.pedestrian_crossings {
        match gt.pedestrian_crossings.get(id) {
            Some(g) => {
                if geometry_changed(&p.geometry, &g.geometry) {
                    cs.insert(AtomicChange::new(
                        *id,
                        ChangeKind::Geometry {
                            before: p.geometry.clone(),
                            after: g.geometry.clone(),
                            reroute: false,
                        },
                    ))?;
                }
            }
            None if gt.lane_segments.contains_key(id) => return Err(kind_changed(*id)),
            None => cs.insert(AtomicChange::new(
                *id,
                ChangeKind::Deletion {
                    element: prior.element(*id).unwrap().without_history(),
                },
            ))?,
        }
    }
    for id in gt.ids() {
        if !prior.contains(id) {
            cs.insert(AtomicChange::new(
                id,
                ChangeKind::Insertion {
                    element: gt.element(id).unwrap().without_history(),
                },
            ))?;
        }
    }
    Ok(cs)
}

fn kind_changed(id: ElementId) -> ChangeError {
    ChangeError::ConflictingChange {
        id,
        reason: "element kind differs between the scenes".into(),
    }
}

fn lane_changes(
    prior: &MapScene,
    gt: &MapScene,
    p: &LaneSegment,
    g: &LaneSegment,
    cs: &mut ChangeSet,
) -> Result<(), ChangeError> {
    let id = p.id;
    let mut links_changed = false;
    for field in ConnectivityField::ALL {
        let (before, after) = (sorted(field.read(p)), sorted(field.read(g)));
        if before != after {
            if matches!(
                field,
                ConnectivityField::Successors | ConnectivityField::Predecessors
            ) {
                links_changed = true;
            }
            cs.insert(AtomicChange::new(
                id,
                ChangeKind::Connectivity {
                    field,
                    before,
                    after,
                },
            ))?;
        }
    }
    if geometry_changed(&p.geometry, &g.geometry) {
        let reroute = p.is_intersection
            && g.is_intersection
            && links_changed
            && function_signature(prior, id).is_some()
            && function_signature(prior, id) == function_signature(gt, id);
        cs.insert(AtomicChange::new(
            id,
            ChangeKind::Geometry {
                before: p.geometry.clone(),
                after: g.geometry.clone(),
                reroute,
            },
        ))?;
    }
    for side in [Side::Left, Side::Right] {
        if p.mark(side) != g.mark(side) {
            cs.insert(AtomicChange::new(
                id,
                ChangeKind::Marking {
                    side,
                    before: p.mark(side),
                    after: g.mark(side),
                },
            ))?;
        }
    }
    if p.lane_type != g.lane_type {
        cs.insert(AtomicChange::new(
            id,
            ChangeKind::TypeChange {
                before: p.lane_type,
                after: g.lane_type,
            },
        ))?;
    }
    Ok(())
}
