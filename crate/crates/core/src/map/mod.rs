//! Vectorized HD map model: lane segments, pedestrian crossings and the
//! scene container that owns them.
//!
//! Identifiers are globally unique across both element kinds, so a bare
//! [`ElementId`] addresses any element of a scene.

mod crop;
mod graph;
pub(crate) mod json;
mod pose;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::geometry::{boundary_ring, signed_area, Polyline2D};

pub use crop::{crop_patch, Patch, DEFAULT_PATCH_EXTENT};
pub use graph::{build_lane_graph, LaneGraph, TopologySignature, VertexId};
pub use json::{element_from_value, element_to_json, parse_map, serialize_map, CanonicalJson};
pub use pose::{parse_poses, serialize_poses, EgoPose};
pub use validate::{validate_scene, Severity, ValidationReport, Violation};

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct ElementId(pub i64);

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for ElementId {
    type Err = std::num::ParseIntError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(ElementId)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    LaneSegment,
    PedestrianCrossing,
}

impl ElementKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::LaneSegment => "lane_segment",
            ElementKind::PedestrianCrossing => "pedestrian_crossing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LaneType {
    Vehicle,
    Bike,
    Bus,
}

impl LaneType {
    pub fn as_str(self) -> &'static str {
        match self {
            LaneType::Vehicle => "VEHICLE",
            LaneType::Bike => "BIKE",
            LaneType::Bus => "BUS",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "VEHICLE" => Some(LaneType::Vehicle),
            "BIKE" => Some(LaneType::Bike),
            "BUS" => Some(LaneType::Bus),
            _ => None,
        }
    }
}

/// Painted pattern of a lane boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MarkStyle {
    Solid,
    Dashed,
    DoubleSolid,
    DoubleDashed,
    DashSolid,
    SolidDash,
    None,
    Unknown,
}

impl MarkStyle {
    pub const ALL: [MarkStyle; 8] = [
        MarkStyle::Solid,
        MarkStyle::Dashed,
        MarkStyle::DoubleSolid,
        MarkStyle::DoubleDashed,
        MarkStyle::DashSolid,
        MarkStyle::SolidDash,
        MarkStyle::None,
        MarkStyle::Unknown,
    ];

    fn token(self) -> &'static str {
        match self {
            MarkStyle::Solid => "SOLID",
            MarkStyle::Dashed => "DASHED",
            MarkStyle::DoubleSolid => "DOUBLE_SOLID",
            MarkStyle::DoubleDashed => "DOUBLE_DASH",
            MarkStyle::DashSolid => "DASH_SOLID",
            MarkStyle::SolidDash => "SOLID_DASH",
            MarkStyle::None => "NONE",
            MarkStyle::Unknown => "UNKNOWN",
        }
    }

    /// True for boundaries that carry paint. `None` marks implicit boundaries.
    pub fn is_painted(self) -> bool {
        !matches!(self, MarkStyle::None | MarkStyle::Unknown)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MarkColor {
    White,
    Yellow,
    Blue,
    NonVisible,
}

impl MarkColor {
    pub const ALL: [MarkColor; 4] = [
        MarkColor::White,
        MarkColor::Yellow,
        MarkColor::Blue,
        MarkColor::NonVisible,
    ];

    fn token(self) -> &'static str {
        match self {
            MarkColor::White => "WHITE",
            MarkColor::Yellow => "YELLOW",
            MarkColor::Blue => "BLUE",
            MarkColor::NonVisible => "NON_VISIBLE",
        }
    }
}

/// Mark style plus colour of one lane boundary.
///
/// Encoded as an upper-case token such as `DASHED_WHITE`. Unpainted
/// boundaries without a colour encode as the bare `NONE` / `UNKNOWN`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LaneMarkType {
    pub mark: MarkStyle,
    pub color: MarkColor,
}

impl LaneMarkType {
    pub const fn new(mark: MarkStyle, color: MarkColor) -> Self {
        Self { mark, color }
    }

    pub const NONE: LaneMarkType = LaneMarkType::new(MarkStyle::None, MarkColor::NonVisible);
    pub const SOLID_WHITE: LaneMarkType = LaneMarkType::new(MarkStyle::Solid, MarkColor::White);
    pub const DASHED_WHITE: LaneMarkType = LaneMarkType::new(MarkStyle::Dashed, MarkColor::White);

    pub fn token(&self) -> String {
        match (self.mark, self.color) {
            (MarkStyle::None | MarkStyle::Unknown, MarkColor::NonVisible) => {
                self.mark.token().to_string()
            }
            (m, c) => format!("{}_{}", m.token(), c.token()),
        }
    }

    pub fn parse(token: &str) -> Option<Self> {
        for mark in [MarkStyle::None, MarkStyle::Unknown] {
            if token == mark.token() {
                return Some(LaneMarkType::new(mark, MarkColor::NonVisible));
            }
        }
        for color in MarkColor::ALL {
            let Some(prefix) = token.strip_suffix(color.token()) else {
                continue;
            };
            let Some(prefix) = prefix.strip_suffix('_') else {
                continue;
            };
            let prefix = if prefix == "DOUBLE_DASHED" {
                "DOUBLE_DASH"
            } else {
                prefix
            };
            if let Some(mark) = MarkStyle::ALL.into_iter().find(|m| m.token() == prefix) {
                return Some(LaneMarkType::new(mark, color));
            }
        }
        None
    }
}

impl fmt::Display for LaneMarkType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

impl Serialize for LaneMarkType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.token())
    }
}

impl<'de> Deserialize<'de> for LaneMarkType {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        LaneMarkType::parse(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown lane mark type {s:?}")))
    }
}

/// Entry of an element's `change_hist`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeTag {
    Geometry,
    Marking,
    Type,
    Connectivity,
    Insertion,
    Deletion,
    Reroute,
}

impl ChangeTag {
    pub const ALL: [ChangeTag; 7] = [
        ChangeTag::Geometry,
        ChangeTag::Marking,
        ChangeTag::Type,
        ChangeTag::Connectivity,
        ChangeTag::Insertion,
        ChangeTag::Deletion,
        ChangeTag::Reroute,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChangeTag::Geometry => "geometry",
            ChangeTag::Marking => "marking",
            ChangeTag::Type => "type",
            ChangeTag::Connectivity => "connectivity",
            ChangeTag::Insertion => "insertion",
            ChangeTag::Deletion => "deletion",
            ChangeTag::Reroute => "reroute",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        ChangeTag::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

/// The three polylines shared by both element kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementGeometry {
    pub left: Polyline2D,
    pub right: Polyline2D,
    pub centerline: Polyline2D,
}

impl ElementGeometry {
    pub fn polylines(&self) -> [&Polyline2D; 3] {
        [&self.left, &self.right, &self.centerline]
    }

    /// Polygon enclosed by the two boundaries (right forward, left backward).
    pub fn ring(&self) -> Vec<crate::geometry::Point> {
        boundary_ring(&self.left, &self.right)
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.ring()).abs()
    }

    /// Mean boundary-to-boundary distance after resampling.
    pub fn mean_width(&self) -> f64 {
        self.left.mean_deviation(&self.right, 10)
    }

    /// Largest per-point deviation of any of the three polylines after resampling.
    pub fn max_deviation(&self, other: &ElementGeometry, n: usize) -> f64 {
        self.left
            .max_deviation(&other.left, n)
            .max(self.right.max_deviation(&other.right, n))
            .max(self.centerline.max_deviation(&other.centerline, n))
    }

    pub fn translated(&self, offset: crate::geometry::Point) -> ElementGeometry {
        ElementGeometry {
            left: self.left.translated(offset),
            right: self.right.translated(offset),
            centerline: self.centerline.translated(offset),
        }
    }

    pub fn quantized(&self) -> Result<ElementGeometry, GeometryError> {
        Ok(ElementGeometry {
            left: self.left.quantized()?,
            right: self.right.quantized()?,
            centerline: self.centerline.quantized()?,
        })
    }
}

/// Change bookkeeping carried by every element.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct History {
    pub is_modified: bool,
    pub change_hist: Vec<ChangeTag>,
}

impl History {
    pub fn record(&mut self, tag: ChangeTag) {
        self.change_hist.push(tag);
        self.is_modified = true;
    }

    pub fn tags(&self) -> BTreeSet<ChangeTag> {
        self.change_hist.iter().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaneSegment {
    pub id: ElementId,
    pub is_intersection: bool,
    pub lane_type: LaneType,
    pub geometry: ElementGeometry,
    pub left_lane_mark_type: LaneMarkType,
    pub right_lane_mark_type: LaneMarkType,
    pub successors: Vec<ElementId>,
    pub predecessors: Vec<ElementId>,
    pub left_neighbor_id: Option<ElementId>,
    pub right_neighbor_id: Option<ElementId>,
    pub history: History,
    /// Fields not understood by this crate, kept for round-tripping.
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl LaneSegment {
    pub fn new(id: ElementId, geometry: ElementGeometry) -> Self {
        Self {
            id,
            is_intersection: false,
            lane_type: LaneType::Vehicle,
            geometry,
            left_lane_mark_type: LaneMarkType::DASHED_WHITE,
            right_lane_mark_type: LaneMarkType::DASHED_WHITE,
            successors: Vec::new(),
            predecessors: Vec::new(),
            left_neighbor_id: None,
            right_neighbor_id: None,
            history: History::default(),
            extra: BTreeMap::new(),
        }
    }

    /// All ids this segment points at, with the field they come from.
    pub fn references(&self) -> impl Iterator<Item = (&'static str, ElementId)> + '_ {
        self.successors
            .iter()
            .map(|&id| ("successors", id))
            .chain(self.predecessors.iter().map(|&id| ("predecessors", id)))
            .chain(self.left_neighbor_id.map(|id| ("left_neighbor_id", id)))
            .chain(self.right_neighbor_id.map(|id| ("right_neighbor_id", id)))
    }

    pub fn mark(&self, side: Side) -> LaneMarkType {
        match side {
            Side::Left => self.left_lane_mark_type,
            Side::Right => self.right_lane_mark_type,
        }
    }

    pub fn mark_mut(&mut self, side: Side) -> &mut LaneMarkType {
        match side {
            Side::Left => &mut self.left_lane_mark_type,
            Side::Right => &mut self.right_lane_mark_type,
        }
    }

    pub fn neighbor(&self, side: Side) -> Option<ElementId> {
        match side {
            Side::Left => self.left_neighbor_id,
            Side::Right => self.right_neighbor_id,
        }
    }

    /// Sort and deduplicate successor and predecessor lists. Their order
    /// carries no meaning and the canonical form keeps them ascending.
    pub fn normalize_links(&mut self) {
        self.successors.sort_unstable();
        self.successors.dedup();
        self.predecessors.sort_unstable();
        self.predecessors.dedup();
    }

    /// Drop every reference to `id`. Returns true if anything was removed.
    pub fn scrub(&mut self, id: ElementId) -> bool {
        let before = (
            self.successors.len(),
            self.predecessors.len(),
            self.left_neighbor_id,
            self.right_neighbor_id,
        );
        self.successors.retain(|&s| s != id);
        self.predecessors.retain(|&p| p != id);
        if self.left_neighbor_id == Some(id) {
            self.left_neighbor_id = None;
        }
        if self.right_neighbor_id == Some(id) {
            self.right_neighbor_id = None;
        }
        before
            != (
                self.successors.len(),
                self.predecessors.len(),
                self.left_neighbor_id,
                self.right_neighbor_id,
            )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PedestrianCrossing {
    pub id: ElementId,
    pub geometry: ElementGeometry,
    pub history: History,
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl PedestrianCrossing {
    pub fn new(id: ElementId, geometry: ElementGeometry) -> Self {
        Self {
            id,
            geometry,
            history: History::default(),
            extra: BTreeMap::new(),
        }
    }
}

/// A lane segment or a pedestrian crossing, owned.
#[derive(Debug, Clone, PartialEq)]
pub enum MapElement {
    LaneSegment(LaneSegment),
    PedestrianCrossing(PedestrianCrossing),
}

impl MapElement {
    pub fn id(&self) -> ElementId {
        match self {
            MapElement::LaneSegment(l) => l.id,
            MapElement::PedestrianCrossing(c) => c.id,
        }
    }

    pub fn kind(&self) -> ElementKind {
        match self {
            MapElement::LaneSegment(_) => ElementKind::LaneSegment,
            MapElement::PedestrianCrossing(_) => ElementKind::PedestrianCrossing,
        }
    }

    pub fn geometry(&self) -> &ElementGeometry {
        match self {
            MapElement::LaneSegment(l) => &l.geometry,
            MapElement::PedestrianCrossing(c) => &c.geometry,
        }
    }

    pub fn history(&self) -> &History {
        match self {
            MapElement::LaneSegment(l) => &l.history,
            MapElement::PedestrianCrossing(c) => &c.history,
        }
    }

    pub fn history_mut(&mut self) -> &mut History {
        match self {
            MapElement::LaneSegment(l) => &mut l.history,
            MapElement::PedestrianCrossing(c) => &mut c.history,
        }
    }

    /// Copy with the change bookkeeping cleared.
    pub fn without_history(&self) -> MapElement {
        let mut e = self.clone();
        *e.history_mut() = History::default();
        e
    }
}

/// A complete vectorized map.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MapScene {
    pub scene_id: String,
    pub lane_segments: BTreeMap<ElementId, LaneSegment>,
    pub pedestrian_crossings: BTreeMap<ElementId, PedestrianCrossing>,
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl MapScene {
    pub fn new(scene_id: impl Into<String>) -> Self {
        Self {
            scene_id: scene_id.into(),
            ..Default::default()
        }
    }

    pub fn contains(&self, id: ElementId) -> bool {
        self.lane_segments.contains_key(&id) || self.pedestrian_crossings.contains_key(&id)
    }

    pub fn element(&self, id: ElementId) -> Option<MapElement> {
        if let Some(l) = self.lane_segments.get(&id) {
            return Some(MapElement::LaneSegment(l.clone()));
        }
        self.pedestrian_crossings
            .get(&id)
            .map(|c| MapElement::PedestrianCrossing(c.clone()))
    }

    pub fn geometry(&self, id: ElementId) -> Option<&ElementGeometry> {
        self.lane_segments
            .get(&id)
            .map(|l| &l.geometry)
            .or_else(|| self.pedestrian_crossings.get(&id).map(|c| &c.geometry))
    }

    pub fn kind_of(&self, id: ElementId) -> Option<ElementKind> {
        if self.lane_segments.contains_key(&id) {
            Some(ElementKind::LaneSegment)
        } else if self.pedestrian_crossings.contains_key(&id) {
            Some(ElementKind::PedestrianCrossing)
        } else {
            None
        }
    }

    pub fn history_mut(&mut self, id: ElementId) -> Option<&mut History> {
        if let Some(l) = self.lane_segments.get_mut(&id) {
            return Some(&mut l.history);
        }
        self.pedestrian_crossings
            .get_mut(&id)
            .map(|c| &mut c.history)
    }

    /// Insert an element, replacing any element of either kind with the same id.
    pub fn insert(&mut self, element: MapElement) {
        let id = element.id();
        self.remove(id);
        match element {
            MapElement::LaneSegment(l) => {
                self.lane_segments.insert(id, l);
            }
            MapElement::PedestrianCrossing(c) => {
                self.pedestrian_crossings.insert(id, c);
            }
        }
    }

    pub fn remove(&mut self, id: ElementId) -> Option<MapElement> {
        if let Some(l) = self.lane_segments.remove(&id) {
            return Some(MapElement::LaneSegment(l));
        }
        self.pedestrian_crossings
            .remove(&id)
            .map(MapElement::PedestrianCrossing)
    }

    pub fn elements(&self) -> impl Iterator<Item = MapElement> + '_ {
        self.lane_segments
            .values()
            .cloned()
            .map(MapElement::LaneSegment)
            .chain(
                self.pedestrian_crossings
                    .values()
                    .cloned()
                    .map(MapElement::PedestrianCrossing),
            )
    }

    pub fn ids(&self) -> BTreeSet<ElementId> {
        self.lane_segments
            .keys()
            .chain(self.pedestrian_crossings.keys())
            .copied()
            .collect()
    }

    pub fn len(&self) -> usize {
        self.lane_segments.len() + self.pedestrian_crossings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Smallest id strictly greater than every id in use.
    pub fn next_free_id(&self) -> ElementId {
        ElementId(self.ids().last().map_or(1, |id| id.0 + 1))
    }

    /// Copy of the scene with all change bookkeeping cleared.
    pub fn without_history(&self) -> MapScene {
        let mut s = self.clone();
        for l in s.lane_segments.values_mut() {
            l.history = History::default();
        }
        for c in s.pedestrian_crossings.values_mut() {
            c.history = History::default();
        }
        s
    }

    pub fn normalize_links(&mut self) {
        for l in self.lane_segments.values_mut() {
            l.normalize_links();
        }
    }

    /// Snap every coordinate to the millimetre grid used by the serializer.
    pub fn quantized(&self) -> Result<MapScene, GeometryError> {
        let mut s = self.clone();
        for l in s.lane_segments.values_mut() {
            l.geometry = l.geometry.quantized()?;
        }
        for c in s.pedestrian_crossings.values_mut() {
            c.geometry = c.geometry.quantized()?;
        }
        Ok(s)
    }

    /// Remove an element and every reference to it. Returns the ids whose
    /// connectivity lost a reference.
    pub fn remove_and_scrub(&mut self, id: ElementId) -> (Option<MapElement>, Vec<ElementId>) {
        let removed = self.remove(id);
        let mut touched = Vec::new();
        for l in self.lane_segments.values_mut() {
            if l.scrub(id) {
                touched.push(l.id);
            }
        }
        (removed, touched)
    }
}
