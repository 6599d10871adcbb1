//! Map JSON codec.
//!
//! Output is canonical: object keys sorted, two-space indentation and
//! coordinates printed with exactly three decimals (millimetres). Fields the
//! codec does not know about are carried along verbatim.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde_json::{Map, Value};

use super::{
    ChangeTag, ElementGeometry, ElementId, ElementKind, History, LaneMarkType, LaneSegment,
    LaneType, MapElement, MapScene, PedestrianCrossing,
};
use crate::error::MapError;
use crate::geometry::{quantize, Point, Polyline2D};

/// Small JSON tree whose printer controls number formatting.
#[derive(Debug, Clone, PartialEq)]
pub enum CanonicalJson {
    Null,
    Bool(bool),
    Int(i64),
    /// Printed with three decimals.
    Fixed(f64),
    /// Printed verbatim (numbers coming from unknown fields).
    Number(String),
    Str(String),
    Array(Vec<CanonicalJson>),
    Object(BTreeMap<String, CanonicalJson>),
}

impl CanonicalJson {
    pub fn from_value(v: &Value) -> CanonicalJson {
        match v {
            Value::Null => CanonicalJson::Null,
            Value::Bool(b) => CanonicalJson::Bool(*b),
            Value::Number(n) => CanonicalJson::Number(n.to_string()),
            Value::String(s) => CanonicalJson::Str(s.clone()),
            Value::Array(a) => CanonicalJson::Array(a.iter().map(Self::from_value).collect()),
            Value::Object(o) => CanonicalJson::Object(
                o.iter()
                    .map(|(k, v)| (k.clone(), Self::from_value(v)))
                    .collect(),
            ),
        }
    }

    /// Plain JSON value; fixed-point numbers keep their full precision.
    pub fn to_value(&self) -> Value {
        match self {
            CanonicalJson::Null => Value::Null,
            CanonicalJson::Bool(b) => Value::Bool(*b),
            CanonicalJson::Int(i) => Value::from(*i),
            CanonicalJson::Fixed(f) => Value::from(*f),
            CanonicalJson::Number(s) => serde_json::from_str(s).unwrap_or(Value::Null),
            CanonicalJson::Str(s) => Value::String(s.clone()),
            CanonicalJson::Array(a) => Value::Array(a.iter().map(Self::to_value).collect()),
            CanonicalJson::Object(m) => {
                Value::Object(m.iter().map(|(k, v)| (k.clone(), v.to_value())).collect())
            }
        }
    }

    pub fn to_pretty_string(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    fn write(&self, out: &mut String, indent: usize) {
        match self {
            CanonicalJson::Null => out.push_str("null"),
            CanonicalJson::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            CanonicalJson::Int(i) => write!(out, "{i}").unwrap(),
            CanonicalJson::Fixed(f) => write!(out, "{:.3}", quantize(*f)).unwrap(),
            CanonicalJson::Number(s) => out.push_str(s),
            CanonicalJson::Str(s) => out.push_str(&serde_json::to_string(s).unwrap()),
            CanonicalJson::Array(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                // points stay on one line to keep files readable
                if items.iter().all(CanonicalJson::is_inline) {
                    out.push('[');
                    for (i, item) in items.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        item.write(out, indent);
                    }
                    out.push(']');
                    return;
                }
                out.push_str("[\n");
                for (i, item) in items.iter().enumerate() {
                    pad(out, indent + 1);
                    item.write(out, indent + 1);
                    if i + 1 < items.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                pad(out, indent);
                out.push(']');
            }
            CanonicalJson::Object(map) => {
                if map.is_empty() {
                    out.push_str("{}");
                    return;
                }
                if self.is_inline() {
                    out.push('{');
                    for (i, (k, v)) in map.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        out.push_str(&serde_json::to_string(k).unwrap());
                        out.push_str(": ");
                        v.write(out, indent);
                    }
                    out.push('}');
                    return;
                }
                out.push_str("{\n");
                for (i, (k, v)) in map.iter().enumerate() {
                    pad(out, indent + 1);
                    out.push_str(&serde_json::to_string(k).unwrap());
                    out.push_str(": ");
                    v.write(out, indent + 1);
                    if i + 1 < map.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                pad(out, indent);
                out.push('}');
            }
        }
    }

    fn is_scalar(&self) -> bool {
        !matches!(self, CanonicalJson::Array(_) | CanonicalJson::Object(_))
    }

    /// Scalars, and objects holding only scalars (points), print on one line.
    fn is_inline(&self) -> bool {
        match self {
            CanonicalJson::Object(m) => m.len() <= 3 && m.values().all(Self::is_scalar),
            CanonicalJson::Array(_) => false,
            _ => true,
        }
    }
}

fn pad(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

fn obj<const N: usize>(entries: [(&str, CanonicalJson); N]) -> BTreeMap<String, CanonicalJson> {
    entries
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

fn point_json(p: Point) -> CanonicalJson {
    CanonicalJson::Object(obj([
        ("x", CanonicalJson::Fixed(p.x)),
        ("y", CanonicalJson::Fixed(p.y)),
    ]))
}

fn polyline_json(p: &Polyline2D) -> CanonicalJson {
    CanonicalJson::Array(p.points().iter().copied().map(point_json).collect())
}

fn ids_json(ids: &[ElementId]) -> CanonicalJson {
    let mut ids = ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    CanonicalJson::Array(ids.iter().map(|id| CanonicalJson::Int(id.0)).collect())
}

fn opt_id_json(id: Option<ElementId>) -> CanonicalJson {
    id.map_or(CanonicalJson::Null, |id| CanonicalJson::Int(id.0))
}

fn history_entries(h: &History, m: &mut BTreeMap<String, CanonicalJson>) {
    m.insert("is_modified".into(), CanonicalJson::Bool(h.is_modified));
    m.insert(
        "change_hist".into(),
        CanonicalJson::Array(
            h.change_hist
                .iter()
                .map(|t| CanonicalJson::Str(t.as_str().into()))
                .collect(),
        ),
    );
}

fn geometry_entries(g: &ElementGeometry, m: &mut BTreeMap<String, CanonicalJson>) {
    m.insert("left_lane_boundary".into(), polyline_json(&g.left));
    m.insert("right_lane_boundary".into(), polyline_json(&g.right));
    m.insert("centerline".into(), polyline_json(&g.centerline));
}

pub(crate) fn geometry_json(g: &ElementGeometry) -> CanonicalJson {
    let mut m = BTreeMap::new();
    geometry_entries(g, &mut m);
    CanonicalJson::Object(m)
}

fn lane_json(l: &LaneSegment) -> CanonicalJson {
    let mut m: BTreeMap<String, CanonicalJson> = l
        .extra
        .iter()
        .map(|(k, v)| (k.clone(), CanonicalJson::from_value(v)))
        .collect();
    m.insert("id".into(), CanonicalJson::Int(l.id.0));
    m.insert(
        "is_intersection".into(),
        CanonicalJson::Bool(l.is_intersection),
    );
    m.insert(
        "lane_type".into(),
        CanonicalJson::Str(l.lane_type.as_str().into()),
    );
    geometry_entries(&l.geometry, &mut m);
    m.insert(
        "left_lane_mark_type".into(),
        CanonicalJson::Str(l.left_lane_mark_type.token()),
    );
    m.insert(
        "right_lane_mark_type".into(),
        CanonicalJson::Str(l.right_lane_mark_type.token()),
    );
    m.insert("successors".into(), ids_json(&l.successors));
    m.insert("predecessors".into(), ids_json(&l.predecessors));
    m.insert("left_neighbor_id".into(), opt_id_json(l.left_neighbor_id));
    m.insert("right_neighbor_id".into(), opt_id_json(l.right_neighbor_id));
    history_entries(&l.history, &mut m);
    CanonicalJson::Object(m)
}

fn crossing_json(c: &PedestrianCrossing) -> CanonicalJson {
    let mut m: BTreeMap<String, CanonicalJson> = c
        .extra
        .iter()
        .map(|(k, v)| (k.clone(), CanonicalJson::from_value(v)))
        .collect();
    m.insert("id".into(), CanonicalJson::Int(c.id.0));
    geometry_entries(&c.geometry, &mut m);
    history_entries(&c.history, &mut m);
    CanonicalJson::Object(m)
}

pub fn element_to_json(e: &MapElement) -> CanonicalJson {
    match e {
        MapElement::LaneSegment(l) => lane_json(l),
        MapElement::PedestrianCrossing(c) => crossing_json(c),
    }
}

pub(crate) fn scene_json(scene: &MapScene) -> CanonicalJson {
    let mut m: BTreeMap<String, CanonicalJson> = scene
        .extra
        .iter()
        .map(|(k, v)| (k.clone(), CanonicalJson::from_value(v)))
        .collect();
    m.insert(
        "scene_id".into(),
        CanonicalJson::Str(scene.scene_id.clone()),
    );
    m.insert(
        "lane_segments".into(),
        CanonicalJson::Object(
            scene
                .lane_segments
                .iter()
                .map(|(id, l)| (id.to_string(), lane_json(l)))
                .collect(),
        ),
    );
    m.insert(
        "pedestrian_crossings".into(),
        CanonicalJson::Object(
            scene
                .pedestrian_crossings
                .iter()
                .map(|(id, c)| (id.to_string(), crossing_json(c)))
                .collect(),
        ),
    );
    CanonicalJson::Object(m)
}

/// Serialize a scene into its canonical byte form.
pub fn serialize_map(scene: &MapScene) -> Vec<u8> {
    scene_json(scene).to_pretty_string().into_bytes()
}

/// Parse and validate a map document.
///
/// Structural problems surface as [`MapError::Schema`] with a JSON path,
/// dangling or duplicated ids as integrity errors and degenerate polylines
/// as [`MapError::Geometry`]. Softer invariants (symmetry, orientation) are
/// left to [`super::validate_scene`].
pub fn parse_map(bytes: &[u8]) -> Result<MapScene, MapError> {
    let value: Value = serde_json::from_slice(bytes)?;
    let root = value
        .as_object()
        .ok_or_else(|| MapError::schema("$", "expected an object"))?;

    let mut scene = MapScene::default();
    for (k, v) in root {
        match k.as_str() {
            "lane_segments" | "pedestrian_crossings" => {}
            "scene_id" => {
                scene.scene_id = v
                    .as_str()
                    .ok_or_else(|| MapError::schema("$.scene_id", "expected a string"))?
                    .to_string();
            }
            _ => {
                scene.extra.insert(k.clone(), v.clone());
            }
        }
    }

    let lanes = root
        .get("lane_segments")
        .ok_or_else(|| MapError::schema("$", "missing field \"lane_segments\""))?
        .as_object()
        .ok_or_else(|| MapError::schema("$.lane_segments", "expected an object"))?;
    let crossings = root
        .get("pedestrian_crossings")
        .ok_or_else(|| MapError::schema("$", "missing field \"pedestrian_crossings\""))?
        .as_object()
        .ok_or_else(|| MapError::schema("$.pedestrian_crossings", "expected an object"))?;

    let mut seen = BTreeSet::new();
    for (key, v) in lanes {
        let path = format!("$.lane_segments.{key}");
        let lane = parse_lane(v, &path)?;
        check_key(key, lane.id, &path)?;
        if !seen.insert(lane.id) {
            return Err(MapError::DuplicateId(lane.id));
        }
        scene.lane_segments.insert(lane.id, lane);
    }
    for (key, v) in crossings {
        let path = format!("$.pedestrian_crossings.{key}");
        let c = parse_crossing(v, &path)?;
        check_key(key, c.id, &path)?;
        if !seen.insert(c.id) {
            return Err(MapError::DuplicateId(c.id));
        }
        scene.pedestrian_crossings.insert(c.id, c);
    }

    for lane in scene.lane_segments.values() {
        for (field, target) in lane.references() {
            if !scene.lane_segments.contains_key(&target) {
                return Err(MapError::DanglingReference {
                    owner: lane.id,
                    field,
                    missing: target,
                });
            }
        }
    }
    Ok(scene)
}

fn check_key(key: &str, id: ElementId, path: &str) -> Result<(), MapError> {
    if key.parse::<ElementId>().ok() != Some(id) {
        return Err(MapError::schema(
            path,
            format!("key {key:?} does not match element id {id}"),
        ));
    }
    Ok(())
}

/// Parse a single element object of the given kind.
pub fn element_from_value(
    kind: ElementKind,
    v: &Value,
    path: &str,
) -> Result<MapElement, MapError> {
    Ok(match kind {
        ElementKind::LaneSegment => MapElement::LaneSegment(parse_lane(v, path)?),
        ElementKind::PedestrianCrossing => MapElement::PedestrianCrossing(parse_crossing(v, path)?),
    })
}

const LANE_FIELDS: [&str; 14] = [
    "id",
    "is_intersection",
    "lane_type",
    "left_lane_boundary",
    "right_lane_boundary",
    "centerline",
    "left_lane_mark_type",
    "right_lane_mark_type",
    "successors",
    "predecessors",
    "right_neighbor_id",
    "left_neighbor_id",
    "is_modified",
    "change_hist",
];

const CROSSING_FIELDS: [&str; 6] = [
    "id",
    "left_lane_boundary",
    "right_lane_boundary",
    "centerline",
    "is_modified",
    "change_hist",
];

struct Fields<'a> {
    map: &'a Map<String, Value>,
    path: &'a str,
}

impl<'a> Fields<'a> {
    fn new(v: &'a Value, path: &'a str) -> Result<Self, MapError> {
        let map = v
            .as_object()
            .ok_or_else(|| MapError::schema(path, "expected an object"))?;
        Ok(Self { map, path })
    }

    fn sub(&self, key: &str) -> String {
        format!("{}.{key}", self.path)
    }

    fn get(&self, key: &str) -> Result<&'a Value, MapError> {
        self.map
            .get(key)
            .ok_or_else(|| MapError::schema(self.path, format!("missing field {key:?}")))
    }

    fn id(&self, key: &str) -> Result<ElementId, MapError> {
        as_id(self.get(key)?, &self.sub(key))
    }

    fn opt_id(&self, key: &str) -> Result<Option<ElementId>, MapError> {
        match self.map.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => as_id(v, &self.sub(key)).map(Some),
        }
    }

    fn bool(&self, key: &str) -> Result<bool, MapError> {
        self.get(key)?
            .as_bool()
            .ok_or_else(|| MapError::schema(self.sub(key), "expected a boolean"))
    }

    fn str(&self, key: &str) -> Result<&'a str, MapError> {
        self.get(key)?
            .as_str()
            .ok_or_else(|| MapError::schema(self.sub(key), "expected a string"))
    }

    fn ids(&self, key: &str) -> Result<Vec<ElementId>, MapError> {
        let arr = self
            .get(key)?
            .as_array()
            .ok_or_else(|| MapError::schema(self.sub(key), "expected an array"))?;
        arr.iter()
            .enumerate()
            .map(|(i, v)| as_id(v, &format!("{}[{i}]", self.sub(key))))
            .collect()
    }

    fn polyline(&self, key: &str) -> Result<Polyline2D, MapError> {
        parse_polyline(self.get(key)?, &self.sub(key))
    }

    fn mark(&self, key: &str) -> Result<LaneMarkType, MapError> {
        let s = self.str(key)?;
        LaneMarkType::parse(s)
            .ok_or_else(|| MapError::schema(self.sub(key), format!("unknown lane mark type {s:?}")))
    }

    fn geometry(&self) -> Result<ElementGeometry, MapError> {
        Ok(ElementGeometry {
            left: self.polyline("left_lane_boundary")?,
            right: self.polyline("right_lane_boundary")?,
            centerline: self.polyline("centerline")?,
        })
    }

    fn history(&self) -> Result<History, MapError> {
        let is_modified = self.bool("is_modified")?;
        let arr = self
            .get("change_hist")?
            .as_array()
            .ok_or_else(|| MapError::schema(self.sub("change_hist"), "expected an array"))?;
        let change_hist = arr
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let p = format!("{}[{i}]", self.sub("change_hist"));
                let s = v
                    .as_str()
                    .ok_or_else(|| MapError::schema(&p, "expected a string"))?;
                ChangeTag::parse(s)
                    .ok_or_else(|| MapError::schema(&p, format!("unknown change tag {s:?}")))
            })
            .collect::<Result<_, _>>()?;
        Ok(History {
            is_modified,
            change_hist,
        })
    }

    fn extra(&self, known: &[&str]) -> BTreeMap<String, Value> {
        self.map
            .iter()
            .filter(|(k, _)| !known.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }
}

fn as_id(v: &Value, path: &str) -> Result<ElementId, MapError> {
    match v {
        Value::Number(n) => n.as_i64().map(ElementId),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
    .ok_or_else(|| MapError::schema(path, "expected an integer id"))
}

fn parse_point(v: &Value, path: &str) -> Result<Point, MapError> {
    let coord = |v: Option<&Value>, axis: &str| -> Result<f64, MapError> {
        v.and_then(Value::as_f64)
            .ok_or_else(|| MapError::schema(format!("{path}.{axis}"), "expected a number"))
    };
    match v {
        Value::Object(o) => Ok(Point::new(coord(o.get("x"), "x")?, coord(o.get("y"), "y")?)),
        Value::Array(a) if a.len() >= 2 => {
            Ok(Point::new(coord(a.first(), "0")?, coord(a.get(1), "1")?))
        }
        _ => Err(MapError::schema(path, "expected a point")),
    }
}

fn parse_polyline(v: &Value, path: &str) -> Result<Polyline2D, MapError> {
    let arr = v
        .as_array()
        .ok_or_else(|| MapError::schema(path, "expected an array of points"))?;
    let pts = arr
        .iter()
        .enumerate()
        .map(|(i, p)| parse_point(p, &format!("{path}[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    Polyline2D::new(pts).map_err(|source| MapError::Geometry {
        path: path.to_string(),
        source,
    })
}

fn parse_lane(v: &Value, path: &str) -> Result<LaneSegment, MapError> {
    let f = Fields::new(v, path)?;
    let lane_type = {
        let s = f.str("lane_type")?;
        LaneType::parse(s).ok_or_else(|| {
            MapError::schema(f.sub("lane_type"), format!("unknown lane type {s:?}"))
        })?
    };
    let mut lane = LaneSegment {
        id: f.id("id")?,
        is_intersection: f.bool("is_intersection")?,
        lane_type,
        geometry: f.geometry()?,
        left_lane_mark_type: f.mark("left_lane_mark_type")?,
        right_lane_mark_type: f.mark("right_lane_mark_type")?,
        successors: f.ids("successors")?,
        predecessors: f.ids("predecessors")?,
        left_neighbor_id: f.opt_id("left_neighbor_id")?,
        right_neighbor_id: f.opt_id("right_neighbor_id")?,
        history: f.history()?,
        extra: f.extra(&LANE_FIELDS),
    };
    lane.normalize_links();
    Ok(lane)
}

fn parse_crossing(v: &Value, path: &str) -> Result<PedestrianCrossing, MapError> {
    let f = Fields::new(v, path)?;
    Ok(PedestrianCrossing {
        id: f.id("id")?,
        geometry: f.geometry()?,
        history: f.history()?,
        extra: f.extra(&CROSSING_FIELDS),
    })
}

/// Parse a bare geometry object (`left_lane_boundary`, `right_lane_boundary`, `centerline`).
pub(crate) fn geometry_from_value(v: &Value, path: &str) -> Result<ElementGeometry, MapError> {
    Fields::new(v, path)?.geometry()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "lane_segments": {
            "1": {
                "id": 1, "is_intersection": false, "lane_type": "VEHICLE",
                "left_lane_boundary": [{"x": 0, "y": 1.75}, {"x": 10, "y": 1.75}],
                "right_lane_boundary": [{"x": 0, "y": -1.75}, {"x": 10, "y": -1.75}],
                "centerline": [{"x": 0, "y": 0}, {"x": 10, "y": 0}],
                "left_lane_mark_type": "DASHED_WHITE", "right_lane_mark_type": "SOLID_WHITE",
                "successors": [], "predecessors": [],
                "left_neighbor_id": null, "right_neighbor_id": null,
                "is_modified": false, "change_hist": []
            }
        },
        "pedestrian_crossings": {}
    }"#;

    #[test]
    fn minimal_document() {
        let scene = parse_map(MINIMAL.as_bytes()).unwrap();
        assert_eq!(scene.lane_segments.len(), 1);
        assert_eq!(scene.pedestrian_crossings.len(), 0);
    }

    #[test]
    fn dangling_successor_names_missing_id() {
        let doc = MINIMAL.replace(r#""successors": []"#, r#""successors": [99]"#);
        match parse_map(doc.as_bytes()) {
            Err(MapError::DanglingReference { missing, .. }) => assert_eq!(missing, ElementId(99)),
            other => panic!("expected dangling reference, got {other:?}"),
        }
    }

    #[test]
    fn missing_field_reports_path() {
        let doc = MINIMAL.replace(r#""lane_type": "VEHICLE","#, "");
        let err = parse_map(doc.as_bytes()).unwrap_err();
        match err {
            MapError::Schema { path, message } => {
                assert_eq!(path, "$.lane_segments.1");
                assert!(message.contains("lane_type"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mistyped_coordinate_reports_path() {
        let doc = MINIMAL.replace(r#"{"x": 10, "y": 0}"#, r#"{"x": "ten", "y": 0}"#);
        match parse_map(doc.as_bytes()).unwrap_err() {
            MapError::Schema { path, .. } => assert_eq!(path, "$.lane_segments.1.centerline[1].x"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_polyline_is_geometry_error() {
        let doc = MINIMAL.replace(r#"{"x": 10, "y": 0}"#, r#"{"x": 0, "y": 0}"#);
        assert!(matches!(
            parse_map(doc.as_bytes()),
            Err(MapError::Geometry { .. })
        ));
    }

    #[test]
    fn empty_scene_serializes_empty_maps() {
        let text = String::from_utf8(serialize_map(&MapScene::default())).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["lane_segments"], serde_json::json!({}));
        assert_eq!(v["pedestrian_crossings"], serde_json::json!({}));
    }

    #[test]
    fn coordinates_have_three_decimals() {
        let scene = parse_map(MINIMAL.as_bytes()).unwrap();
        let text = String::from_utf8(serialize_map(&scene)).unwrap();
        assert!(text.contains(r#"{"x": 10.000, "y": -1.750}"#), "{text}");
    }

    #[test]
    fn unknown_fields_survive() {
        let doc = MINIMAL.replace(
            r#""is_intersection": false,"#,
            r#""is_intersection": false, "speed_limit_mps": 13.4112, "tags": {"b": 1, "a": [1.50, 2]},"#,
        );
        let scene = parse_map(doc.as_bytes()).unwrap();
        let text = String::from_utf8(serialize_map(&scene)).unwrap();
        assert!(text.contains("\"speed_limit_mps\": 13.4112"));
        let again = parse_map(text.as_bytes()).unwrap();
        assert_eq!(again, scene);
    }
}
