use std::collections::{BTreeMap, BTreeSet};

use super::{AtomicChange, ChangeKey, ChangeKind, ChangeSet, ConnectivityField};
use crate::error::ChangeError;
use crate::map::{ChangeTag, ElementId, MapElement, MapScene};

fn check_scene(scene: &MapScene, cs: &ChangeSet) -> Result<(), ChangeError> {
    if cs.base_scene_id != scene.scene_id {
        return Err(ChangeError::SceneMismatch {
            expected: cs.base_scene_id.clone(),
            found: scene.scene_id.clone(),
        });
    }
    Ok(())
}

fn sorted(ids: &[ElementId]) -> Vec<ElementId> {
    let mut v = ids.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Check every change against the current state of `scene`.
fn precheck(scene: &MapScene, cs: &ChangeSet) -> Result<(), ChangeError> {
    let lane_only = |id| ChangeError::ConflictingChange {
        id,
        reason: "lane-only change on a pedestrian crossing".into(),
    };
    for (id, kind) in cs.iter() {
        if let ChangeKind::Insertion { .. } = kind {
            if scene.contains(id) {
                return Err(ChangeError::IdCollision(id));
            }
            continue;
        }
        if !scene.contains(id) {
            return Err(ChangeError::TargetMissing(id));
        }
        let lane = scene.lane_segments.get(&id);
        let mismatch = |what| ChangeError::BeforeMismatch { id, what };
        match kind {
            ChangeKind::Insertion { .. } => unreachable!(),
            ChangeKind::Deletion { element } => {
                let current = scene.element(id).expect("checked above");
                if current.without_history() != element.without_history() {
                    return Err(mismatch("element"));
                }
            }
            ChangeKind::Geometry {
                before, reroute, ..
            } => {
                if scene.geometry(id) != Some(before) {
                    return Err(mismatch("geometry"));
                }
                if *reroute && !lane.is_some_and(|l| l.is_intersection) {
                    return Err(ChangeError::ConflictingChange {
                        id,
                        reason: "reroute outside an intersection".into(),
                    });
                }
            }
            ChangeKind::Marking { side, before, .. } => {
                let lane = lane.ok_or_else(|| lane_only(id))?;
                if lane.mark(*side) != *before {
                    return Err(mismatch("lane mark type"));
                }
            }
            ChangeKind::TypeChange { before, .. } => {
                let lane = lane.ok_or_else(|| lane_only(id))?;
                if lane.lane_type != *before {
                    return Err(mismatch("lane type"));
                }
            }
            ChangeKind::Connectivity { field, before, .. } => {
                let lane = lane.ok_or_else(|| lane_only(id))?;
                if sorted(&field.read(lane)) != sorted(before) {
                    return Err(mismatch("connectivity"));
                }
            }
        }
    }
    Ok(())
}

/// Apply `cs` to `scene`.
///
/// Field edits run first, then deletions (which scrub references to the
/// deleted ids), then insertions. An inserted segment is linked back into
/// the successor/predecessor lists of the segments it names. Every touched
/// element gets the applied change kinds appended to its `change_hist`.
pub fn apply_changeset(scene: &MapScene, cs: &ChangeSet) -> Result<MapScene, ChangeError> {
    check_scene(scene, cs)?;
    precheck(scene, cs)?;

    let mut out = scene.clone();
    let mut tags: BTreeMap<ElementId, BTreeSet<ChangeTag>> = BTreeMap::new();
    let mut tag = |id: ElementId, t: ChangeTag| {
        tags.entry(id).or_default().insert(t);
    };

    for (id, kind) in cs.iter() {
        match kind {
            ChangeKind::Geometry { after, reroute, .. } => {
                if let Some(l) = out.lane_segments.get_mut(&id) {
                    l.geometry = after.clone();
                } else if let Some(c) = out.pedestrian_crossings.get_mut(&id) {
                    c.geometry = after.clone();
                }
                tag(
                    id,
                    if *reroute {
                        ChangeTag::Reroute
                    } else {
                        ChangeTag::Geometry
                    },
                );
            }
            ChangeKind::Marking { side, after, .. } => {
                *out.lane_segments.get_mut(&id).unwrap().mark_mut(*side) = *after;
                tag(id, ChangeTag::Marking);
            }
            ChangeKind::TypeChange { after, .. } => {
                out.lane_segments.get_mut(&id).unwrap().lane_type = *after;
                tag(id, ChangeTag::Type);
            }
            ChangeKind::Connectivity { field, after, .. } => {
                field.write(out.lane_segments.get_mut(&id).unwrap(), after);
                tag(id, ChangeTag::Connectivity);
            }
            ChangeKind::Insertion { .. } | ChangeKind::Deletion { .. } => {}
        }
    }

    for element in cs.deletions() {
        let (_, touched) = out.remove_and_scrub(element.id());
        for t in touched {
            tag(t, ChangeTag::Connectivity);
        }
    }

    for element in cs.insertions() {
        let element = element.without_history();
        let id = element.id();
        if let MapElement::LaneSegment(lane) = &element {
            for s in &lane.successors {
                if let Some(other) = out.lane_segments.get_mut(s) {
                    if !other.predecessors.contains(&id) {
                        other.predecessors.push(id);
                        other.normalize_links();
                        tag(*s, ChangeTag::Connectivity);
                    }
                }
            }
            for p in &lane.predecessors {
                if let Some(other) = out.lane_segments.get_mut(p) {
                    if !other.successors.contains(&id) {
                        other.successors.push(id);
                        other.normalize_links();
                        tag(*p, ChangeTag::Connectivity);
                    }
                }
            }
        }
        out.insert(element);
        tag(id, ChangeTag::Insertion);
    }

    for lane in out.lane_segments.values() {
        if let Some((_, missing)) = lane
            .references()
            .find(|(_, r)| !out.lane_segments.contains_key(r))
        {
            return Err(ChangeError::TargetMissing(missing));
        }
    }

    for (id, set) in tags {
        if let Some(h) = out.history_mut(id) {
            for t in set {
                h.record(t);
            }
        }
    }
    Ok(out)
}

/// Invert `cs`, which must apply cleanly to `base`.
///
/// Insertions and deletions swap and every field change swaps its before and
/// after values. References that applying `cs` scrubs implicitly are
/// restored by explicit connectivity changes, so
/// `apply(invert(cs), apply(cs, base)) == base` up to change bookkeeping.
/// When `cs` already spells out every scrubbed reference (as
/// [`super::diff_maps`] output does), `invert` is an involution.
pub fn invert_changeset(cs: &ChangeSet, base: &MapScene) -> Result<ChangeSet, ChangeError> {
    check_scene(base, cs)?;
    for (id, kind) in cs.iter() {
        if !matches!(kind, ChangeKind::Insertion { .. }) && !base.contains(id) {
            return Err(ChangeError::TargetMissing(id));
        }
    }

    let mut inv = ChangeSet::new(cs.base_scene_id.clone());
    for (id, kind) in cs.iter() {
        inv.insert(AtomicChange::new(id, kind.inverted()))?;
    }

    let deleted: BTreeSet<ElementId> = cs.deletions().map(MapElement::id).collect();
    if deleted.is_empty() {
        return Ok(inv);
    }
    for lane in base.lane_segments.values() {
        if cs.targets().contains(&lane.id)
            && cs
                .keys_for(lane.id)
                .any(|k| matches!(k, ChangeKey::Deletion | ChangeKey::Insertion))
        {
            continue;
        }
        for field in ConnectivityField::ALL {
            if cs.get(lane.id, ChangeKey::Connectivity(field)).is_some() {
                continue;
            }
            let full = field.read(lane);
            let scrubbed: Vec<ElementId> = full
                .iter()
                .copied()
                .filter(|r| !deleted.contains(r))
                .collect();
            if scrubbed != full {
                inv.insert(AtomicChange::new(
                    lane.id,
                    ChangeKind::Connectivity {
                        field,
                        before: scrubbed,
                        after: full,
                    },
                ))?;
            }
        }
    }
    Ok(inv)
}
