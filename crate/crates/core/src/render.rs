//! Deterministic SVG rendering of scenes and evaluation frames.
//!
//! Colors: purple marking, light green insertion, red deletion, dark green
//! geometry, gray unchanged. Elements with several classes get a striped
//! fill.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::change::{overlay_deletions, ChangeClass, ChangeSet};
use crate::eval::{ChangeStatus, FrameSample, PrimaryLabel};
use crate::geometry::{Point, Polyline2D};
use crate::map::{ElementGeometry, MapScene};

const UNCHANGED: &str = "#8c8c8c";
const MARGIN: f64 = 5.0;

/// Classes that have a color of their own, in stripe order.
const COLORED: [ChangeClass; 4] = [
    ChangeClass::Insertion,
    ChangeClass::Deletion,
    ChangeClass::Geometry,
    ChangeClass::Marking,
];

pub fn class_color(c: ChangeClass) -> &'static str {
    match c {
        ChangeClass::Marking => "#8e44ad",
        ChangeClass::Insertion => "#90ee90",
        ChangeClass::Deletion => "#d62728",
        ChangeClass::Geometry => "#1b6e2d",
        ChangeClass::Type | ChangeClass::Connectivity => UNCHANGED,
    }
}

struct Item<'a> {
    id: String,
    kind: &'static str,
    geometry: &'a ElementGeometry,
    classes: Vec<ChangeClass>,
    dashed: bool,
}

fn fmt_pt(p: Point) -> String {
    // y is flipped so that north points up
    format!("{:.3},{:.3}", p.x, -p.y)
}

fn path(line: &Polyline2D) -> String {
    line.points()
        .iter()
        .map(|p| fmt_pt(*p))
        .collect::<Vec<_>>()
        .join(" ")
}

fn fill_for(classes: &[ChangeClass]) -> String {
    match classes {
        [] => UNCHANGED.to_string(),
        [c] => class_color(*c).to_string(),
        many => format!(
            "url(#stripe-{})",
            many.iter()
                .map(|c| c.as_str())
                .collect::<Vec<_>>()
                .join("-")
        ),
    }
}

fn render(items: &[Item]) -> String {
    let pts: Vec<Point> = items
        .iter()
        .flat_map(|i| {
            i.geometry
                .polylines()
                .into_iter()
                .flat_map(|p| p.points().to_vec())
        })
        .collect();
    let (x0, y0, x1, y1) = if pts.is_empty() {
        (0.0, 0.0, 100.0, 100.0)
    } else {
        let xs = pts.iter().map(|p| p.x);
        let ys = pts.iter().map(|p| -p.y);
        (
            xs.clone().fold(f64::INFINITY, f64::min) - MARGIN,
            ys.clone().fold(f64::INFINITY, f64::min) - MARGIN,
            xs.fold(f64::NEG_INFINITY, f64::max) + MARGIN,
            ys.fold(f64::NEG_INFINITY, f64::max) + MARGIN,
        )
    };
    let (w, h) = (x1 - x0, y1 - y0);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0:.3} {y0:.3} {w:.3} {h:.3}" width="{:.0}" height="{:.0}">"#,
        w * 8.0,
        h * 8.0
    );
    let stripes: BTreeSet<&Vec<ChangeClass>> = items
        .iter()
        .map(|i| &i.classes)
        .filter(|c| c.len() > 1)
        .collect();
    if !stripes.is_empty() {
        out.push_str("<defs>\n");
        for classes in stripes {
            let name = classes
                .iter()
                .map(|c| c.as_str())
                .collect::<Vec<_>>()
                .join("-");
            let n = classes.len() as f64;
            let _ = writeln!(
                out,
                r#"<pattern id="stripe-{name}" patternUnits="userSpaceOnUse" width="{n}" height="{n}" patternTransform="rotate(45)">"#
            );
            for (k, c) in classes.iter().enumerate() {
                let _ = writeln!(
                    out,
                    r#"<rect x="{k}" y="0" width="1" height="{n}" fill="{}"/>"#,
                    class_color(*c)
                );
            }
            out.push_str("</pattern>\n");
        }
        out.push_str("</defs>\n");
    }
    let _ = writeln!(
        out,
        r#"<rect class="frame" x="{x0:.3}" y="{y0:.3}" width="{w:.3}" height="{h:.3}" fill="white" stroke="black" stroke-width="0.2"/>"#
    );
    for i in items {
        let label = if i.classes.is_empty() {
            "unchanged".to_string()
        } else {
            i.classes
                .iter()
                .map(|c| c.as_str())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let stroke = i.classes.first().map_or(UNCHANGED, |c| class_color(*c));
        let dash = if i.dashed {
            r#" stroke-dasharray="1,1""#
        } else {
            ""
        };
        let _ = writeln!(out, r#"<g class="{} {label}" data-id="{}">"#, i.kind, i.id);
        let ring: Vec<String> = i.geometry.ring().into_iter().map(fmt_pt).collect();
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{}" fill-opacity="0.5" stroke="none"/>"#,
            ring.join(" "),
            fill_for(&i.classes)
        );
        for b in [&i.geometry.left, &i.geometry.right] {
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="0.3"{dash}/>"#,
                path(b)
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

fn classes_of_tags(tags: &BTreeSet<crate::map::ChangeTag>) -> Vec<ChangeClass> {
    let present: BTreeSet<ChangeClass> = tags.iter().map(|&t| ChangeClass::of_tag(t)).collect();
    COLORED
        .into_iter()
        .filter(|c| present.contains(c))
        .collect()
}

fn classes_of_status(s: &ChangeStatus) -> Vec<ChangeClass> {
    match s.primary {
        PrimaryLabel::NoChange => vec![],
        PrimaryLabel::Insertion => vec![ChangeClass::Insertion],
        PrimaryLabel::Deletion => vec![ChangeClass::Deletion],
        PrimaryLabel::Other => {
            let mut v = Vec::new();
            if s.secondary.geo {
                v.push(ChangeClass::Geometry);
            }
            if s.secondary.mark {
                v.push(ChangeClass::Marking);
            }
            v
        }
    }
}

/// Render a scene. Change classes come from element history; with a change
/// set, deleted elements are drawn as well.
pub fn render_svg(scene: &MapScene, cs: Option<&ChangeSet>) -> String {
    let scene = match cs {
        Some(cs) => overlay_deletions(scene, cs),
        None => scene.clone(),
    };
    let elements: Vec<_> = scene.elements().collect();
    let items: Vec<Item> = elements
        .iter()
        .map(|e| Item {
            id: e.id().to_string(),
            kind: e.kind().as_str(),
            geometry: e.geometry(),
            classes: classes_of_tags(&e.history().tags()),
            dashed: false,
        })
        .collect();
    render(&items)
}

/// Render an evaluation frame: ground truth solid, predictions dashed.
pub fn render_frame_svg(frame: &FrameSample) -> String {
    let gt = frame.ground_truth.iter().enumerate().map(|(k, g)| Item {
        id: format!("gt-{k}"),
        kind: g.kind.as_str(),
        geometry: &g.geometry,
        classes: classes_of_status(&g.status),
        dashed: false,
    });
    let pred = frame.predictions.iter().enumerate().map(|(k, p)| Item {
        id: format!("pred-{k}"),
        kind: p.kind.as_str(),
        geometry: &p.geometry,
        classes: classes_of_status(&p.status),
        dashed: true,
    });
    render(&gt.chain(pred).collect::<Vec<_>>())
}
