use thiserror::Error;

use crate::map::ElementId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("polyline needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("non-finite coordinate at vertex {0}")]
    NonFinite(usize),
    #[error("vertex {0} repeats its predecessor")]
    RepeatedVertex(usize),
    #[error("polyline has zero length")]
    ZeroLength,
    #[error("crossing polygon is self-intersecting")]
    SelfIntersecting,
}

/// Errors raised while reading a map document.
#[derive(Debug, Error)]
pub enum MapError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("integrity error: element {owner} references missing id {missing} via {field}")]
    DanglingReference {
        owner: ElementId,
        field: &'static str,
        missing: ElementId,
    },
    #[error("integrity error: id {0} is used more than once")]
    DuplicateId(ElementId),
    #[error("geometry error at {path}: {source}")]
    Geometry {
        path: String,
        #[source]
        source: GeometryError,
    },
}

impl MapError {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        MapError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChangeError {
    #[error("change targets missing element {0}")]
    TargetMissing(ElementId),
    #[error("insertion reuses existing id {0}")]
    IdCollision(ElementId),
    #[error("conflicting change on element {id}: {reason}")]
    ConflictingChange { id: ElementId, reason: String },
    #[error("change set was built for scene {expected:?} but applied to {found:?}")]
    SceneMismatch { expected: String, found: String },
    #[error("recorded 'before' value of {id} does not match the scene ({what})")]
    BeforeMismatch { id: ElementId, what: &'static str },
    #[error("change set references id {0} that is absent from both scenes")]
    InconsistentInput(ElementId),
}

/// Errors raised while reading a change set sidecar.
#[derive(Debug, Error)]
pub enum ChangeSetParseError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Change(#[from] ChangeError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("empty input")]
    EmptyInput,
    #[error("thresholds must be positive and ascending")]
    InvalidThresholds,
    #[error("confidence {0} outside [0, 1]")]
    InvalidConfidence(f64),
    #[error("secondary flags set on a prediction whose primary label is not 'other'")]
    InvalidSecondary,
    #[error("degenerate geometry in frame {frame}: {source}")]
    Geometry {
        frame: String,
        #[source]
        source: GeometryError,
    },
}
