//! JSON sidecar format for change sets.
//!
//! ```json
//! {"base_scene_id": "...", "changes": [{"target_id": 5, "kind": "marking", ...}]}
//! ```
//! Coordinates keep full precision so that `before` values match the scene
//! exactly on re-application.

use serde_json::{json, Map, Value};

use super::{AtomicChange, ChangeKind, ChangeSet, ConnectivityField};
use crate::error::{ChangeSetParseError, MapError};
use crate::map::json::{geometry_from_value, geometry_json};
use crate::map::{
    element_from_value, element_to_json, ElementId, ElementKind, LaneMarkType, LaneType, Side,
};

fn side_str(s: Side) -> &'static str {
    match s {
        Side::Left => "left",
        Side::Right => "right",
    }
}

fn ids(v: &[ElementId]) -> Value {
    Value::from(v.iter().map(|i| i.0).collect::<Vec<_>>())
}

fn change_json(id: ElementId, kind: &ChangeKind) -> Value {
    let mut m = Map::new();
    m.insert("target_id".into(), json!(id.0));
    m.insert("kind".into(), json!(kind.name()));
    match kind {
        ChangeKind::Geometry {
            before,
            after,
            reroute,
        } => {
            m.insert("before".into(), geometry_json(before).to_value());
            m.insert("after".into(), geometry_json(after).to_value());
            m.insert("reroute".into(), json!(reroute));
        }
        ChangeKind::Marking {
            side,
            before,
            after,
        } => {
            m.insert("side".into(), json!(side_str(*side)));
            m.insert("before".into(), json!(before.token()));
            m.insert("after".into(), json!(after.token()));
        }
        ChangeKind::TypeChange { before, after } => {
            m.insert("before".into(), json!(before.as_str()));
            m.insert("after".into(), json!(after.as_str()));
        }
        ChangeKind::Connectivity {
            field,
            before,
            after,
        } => {
            m.insert("field".into(), json!(field.as_str()));
            m.insert("before".into(), ids(before));
            m.insert("after".into(), ids(after));
        }
        ChangeKind::Insertion { element } | ChangeKind::Deletion { element } => {
            m.insert("element_kind".into(), json!(element.kind().as_str()));
            m.insert("element".into(), element_to_json(element).to_value());
        }
    }
    Value::Object(m)
}

/// Serialize a change set. Changes are listed in (target id, slot) order.
pub fn changeset_to_json(cs: &ChangeSet) -> Vec<u8> {
    let doc = json!({
        "base_scene_id": cs.base_scene_id,
        "changes": cs.iter().map(|(id, k)| change_json(id, k)).collect::<Vec<_>>(),
    });
    let mut out = serde_json::to_vec_pretty(&doc).expect("change set serializes");
    out.push(b'\n');
    out
}

fn field<'a>(m: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, MapError> {
    m.get(key)
        .ok_or_else(|| MapError::schema(path, format!("missing field {key:?}")))
}

fn string<'a>(m: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a str, MapError> {
    field(m, key, path)?
        .as_str()
        .ok_or_else(|| MapError::schema(format!("{path}.{key}"), "expected a string"))
}

fn id_list(m: &Map<String, Value>, key: &str, path: &str) -> Result<Vec<ElementId>, MapError> {
    let p = format!("{path}.{key}");
    field(m, key, path)?
        .as_array()
        .ok_or_else(|| MapError::schema(&p, "expected an array"))?
        .iter()
        .map(|v| {
            v.as_i64()
                .map(ElementId)
                .ok_or_else(|| MapError::schema(&p, "expected integer ids"))
        })
        .collect()
}

fn parse_change(v: &Value, path: &str) -> Result<AtomicChange, MapError> {
    let m = v
        .as_object()
        .ok_or_else(|| MapError::schema(path, "expected an object"))?;
    let target = field(m, "target_id", path)?
        .as_i64()
        .map(ElementId)
        .ok_or_else(|| MapError::schema(format!("{path}.target_id"), "expected an integer"))?;
    let kind = string(m, "kind", path)?;
    let bad = |key: &str, what: &str| MapError::schema(format!("{path}.{key}"), what.to_string());
    let kind = match kind {
        "geometry" => ChangeKind::Geometry {
            before: geometry_from_value(field(m, "before", path)?, &format!("{path}.before"))?,
            after: geometry_from_value(field(m, "after", path)?, &format!("{path}.after"))?,
            reroute: match m.get("reroute") {
                None => false,
                Some(v) => v
                    .as_bool()
                    .ok_or_else(|| bad("reroute", "expected a boolean"))?,
            },
        },
        "marking" => {
            let mark = |key| {
                let s = string(m, key, path)?;
                LaneMarkType::parse(s).ok_or_else(|| bad(key, "unknown lane mark type"))
            };
            ChangeKind::Marking {
                side: match string(m, "side", path)? {
                    "left" => Side::Left,
                    "right" => Side::Right,
                    _ => return Err(bad("side", "expected \"left\" or \"right\"")),
                },
                before: mark("before")?,
                after: mark("after")?,
            }
        }
        "type" => {
            let ty = |key| {
                LaneType::parse(string(m, key, path)?).ok_or_else(|| bad(key, "unknown lane type"))
            };
            ChangeKind::TypeChange {
                before: ty("before")?,
                after: ty("after")?,
            }
        }
        "connectivity" => ChangeKind::Connectivity {
            field: ConnectivityField::parse(string(m, "field", path)?)
                .ok_or_else(|| bad("field", "unknown connectivity field"))?,
            before: id_list(m, "before", path)?,
            after: id_list(m, "after", path)?,
        },
        "insertion" | "deletion" => {
            let ek = match string(m, "element_kind", path)? {
                "lane_segment" => ElementKind::LaneSegment,
                "pedestrian_crossing" => ElementKind::PedestrianCrossing,
                _ => return Err(bad("element_kind", "unknown element kind")),
            };
            let mut element =
                element_from_value(ek, field(m, "element", path)?, &format!("{path}.element"))?;
            if let crate::map::MapElement::LaneSegment(l) = &mut element {
                l.normalize_links();
            }
            if kind == "insertion" {
                ChangeKind::Insertion { element }
            } else {
                ChangeKind::Deletion { element }
            }
        }
        other => return Err(bad("kind", &format!("unknown change kind {other:?}"))),
    };
    Ok(AtomicChange::new(target, kind))
}

pub fn changeset_from_json(bytes: &[u8]) -> Result<ChangeSet, ChangeSetParseError> {
    let v: Value = serde_json::from_slice(bytes).map_err(MapError::from)?;
    let root = v
        .as_object()
        .ok_or_else(|| MapError::schema("$", "expected an object"))?;
    let base = string(root, "base_scene_id", "$")?.to_string();
    let changes = field(root, "changes", "$")?
        .as_array()
        .ok_or_else(|| MapError::schema("$.changes", "expected an array"))?;
    let mut cs = ChangeSet::new(base);
    for (i, c) in changes.iter().enumerate() {
        cs.insert(parse_change(c, &format!("$.changes[{i}]"))?)?;
    }
    Ok(cs)
}
