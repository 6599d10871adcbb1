//! Scene invariant checks. Violations are reported as data.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{ElementId, History, MapScene};
use crate::geometry::{is_simple_ring, signed_area};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub element: ElementId,
    pub rule: &'static str,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(
            f,
            "{level}: [{}] element {}: {}",
            self.rule, self.element, self.message
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.violations
            .iter()
            .any(|v| v.severity == Severity::Error)
    }

    pub fn rule_count(&self, rule: &str) -> usize {
        self.violations.iter().filter(|v| v.rule == rule).count()
    }

    fn push(
        &mut self,
        element: ElementId,
        rule: &'static str,
        severity: Severity,
        message: String,
    ) {
        self.violations.push(Violation {
            element,
            rule,
            severity,
            message,
        });
    }
}

pub const RULE_UNIQUE_IDS: &str = "globally unique ids";
pub const RULE_REFERENCES: &str = "referential integrity";
pub const RULE_SYMMETRY: &str = "predecessor/successor symmetry";
pub const RULE_MODIFIED: &str = "is_modified consistency";
pub const RULE_SIMPLE: &str = "simple crossing polygon";
pub const RULE_ORIENTATION: &str = "canonical orientation";

fn check_history(report: &mut ValidationReport, id: ElementId, h: &History) {
    if h.is_modified == h.change_hist.is_empty() {
        report.push(
            id,
            RULE_MODIFIED,
            Severity::Error,
            format!(
                "is_modified is {} but change_hist has {} entries",
                h.is_modified,
                h.change_hist.len()
            ),
        );
    }
}

/// Check every scene invariant.
///
/// Clockwise crossings are reported at warning level since raw data may not
/// have been through orientation unification yet.
pub fn validate_scene(scene: &MapScene) -> ValidationReport {
    let mut report = ValidationReport::default();

    for id in scene.lane_segments.keys() {
        if scene.pedestrian_crossings.contains_key(id) {
            report.push(
                *id,
                RULE_UNIQUE_IDS,
                Severity::Error,
                "id used by both a lane segment and a crossing".into(),
            );
        }
    }

    let mut forward = BTreeSet::new();
    let mut backward = BTreeSet::new();
    for lane in scene.lane_segments.values() {
        for (field, target) in lane.references() {
            if !scene.lane_segments.contains_key(&target) {
                report.push(
                    lane.id,
                    RULE_REFERENCES,
                    Severity::Error,
                    format!("{field} references missing lane segment {target}"),
                );
            }
        }
        forward.extend(lane.successors.iter().map(|&s| (lane.id, s)));
        backward.extend(lane.predecessors.iter().map(|&p| (p, lane.id)));
        check_history(&mut report, lane.id, &lane.history);
    }
    for &(a, b) in forward.difference(&backward) {
        if scene.lane_segments.contains_key(&b) {
            report.push(
                a,
                RULE_SYMMETRY,
                Severity::Error,
                format!("{b} is a successor of {a} but does not list it as predecessor"),
            );
        }
    }
    for &(a, b) in backward.difference(&forward) {
        if scene.lane_segments.contains_key(&a) {
            report.push(
                b,
                RULE_SYMMETRY,
                Severity::Error,
                format!("{a} is a predecessor of {b} but does not list it as successor"),
            );
        }
    }

    for c in scene.pedestrian_crossings.values() {
        check_history(&mut report, c.id, &c.history);
        let ring = c.geometry.ring();
        if !is_simple_ring(&ring) {
            report.push(
                c.id,
                RULE_SIMPLE,
                Severity::Error,
                "boundary polygon self-intersects".into(),
            );
        } else if signed_area(&ring) < 0.0 {
            report.push(
                c.id,
                RULE_ORIENTATION,
                Severity::Warning,
                "boundary polygon is clockwise; run crossing orientation unification".into(),
            );
        }
    }
    report
}
