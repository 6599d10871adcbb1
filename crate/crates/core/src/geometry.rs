//! Planar geometry primitives used throughout the crate.
//!
//! Everything here works in metres on a flat 2D plane. Polylines are the
//! basic building block for lane boundaries, centerlines and crossing edges.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// Two consecutive polyline vertices closer than this are considered identical.
pub const VERTEX_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    /// Rotate by +90 degrees (counterclockwise).
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Option<Point> {
        let n = self.norm();
        (n > VERTEX_EPS).then(|| Point::new(self.x / n, self.y / n))
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }

    pub fn rotate(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn quantized(self) -> Point {
        Point::new(quantize(self.x), quantize(self.y))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// Snap a coordinate to the millimetre grid. `-0.0` is folded into `0.0`.
pub fn quantize(v: f64) -> f64 {
    let r = (v * 1000.0).round() / 1000.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// An ordered list of at least two distinct, finite points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Polyline2D(Vec<Point>);

impl TryFrom<Vec<Point>> for Polyline2D {
    type Error = GeometryError;
    fn try_from(points: Vec<Point>) -> Result<Self, Self::Error> {
        Polyline2D::new(points)
    }
}

impl From<Polyline2D> for Vec<Point> {
    fn from(p: Polyline2D) -> Self {
        p.0
    }
}

impl Polyline2D {
    pub fn new(points: Vec<Point>) -> Result<Self, GeometryError> {
        if points.len() < 2 {
            return Err(GeometryError::TooFewPoints(points.len()));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        if let Some(i) = points
            .windows(2)
            .position(|w| (w[0] - w[1]).norm() <= VERTEX_EPS)
        {
            return Err(GeometryError::RepeatedVertex(i + 1));
        }
        Ok(Self(points))
    }

    /// Build from raw points, silently dropping consecutive duplicates.
    pub fn from_points_dedup(points: Vec<Point>) -> Result<Self, GeometryError> {
        let mut out: Vec<Point> = Vec::with_capacity(points.len());
        for p in points {
            if out.last().is_none_or(|q| (*q - p).norm() > VERTEX_EPS) {
                out.push(p);
            }
        }
        Self::new(out)
    }

    pub fn points(&self) -> &[Point] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Point {
        self.0[0]
    }

    pub fn last(&self) -> Point {
        self.0[self.0.len() - 1]
    }

    pub fn length(&self) -> f64 {
        self.0.windows(2).map(|w| w[0].dist(w[1])).sum()
    }

    pub fn reversed(&self) -> Polyline2D {
        let mut pts = self.0.clone();
        pts.reverse();
        Polyline2D(pts)
    }

    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> Result<Polyline2D, GeometryError> {
        Polyline2D::from_points_dedup(self.0.iter().copied().map(f).collect())
    }

    pub fn translated(&self, offset: Point) -> Polyline2D {
        // a rigid translation can not create repeated vertices
        Polyline2D(self.0.iter().map(|p| *p + offset).collect())
    }

    /// Snap to the millimetre grid. Fails if snapping collapses the polyline.
    pub fn quantized(&self) -> Result<Polyline2D, GeometryError> {
        self.map_points(Point::quantized)
    }

    pub fn is_quantized(&self) -> bool {
        self.0.iter().all(|p| p.quantized() == *p)
    }

    /// Cumulative arc length at each vertex, starting at 0.
    pub fn cumulative_lengths(&self) -> Vec<f64> {
        let mut acc = Vec::with_capacity(self.0.len());
        let mut s = 0.0;
        acc.push(0.0);
        for w in self.0.windows(2) {
            s += w[0].dist(w[1]);
            acc.push(s);
        }
        acc
    }

    /// Point at arc length `s` (clamped to the polyline).
    pub fn point_at(&self, s: f64) -> Point {
        self.point_and_tangent_at(s).0
    }

    /// Point and unit tangent at arc length `s`.
    pub fn point_and_tangent_at(&self, s: f64) -> (Point, Point) {
        let cum = self.cumulative_lengths();
        let total = *cum.last().unwrap();
        let s = s.clamp(0.0, total);
        let mut seg = cum.partition_point(|&c| c <= s).saturating_sub(1);
        seg = seg.min(self.0.len() - 2);
        let a = self.0[seg];
        let b = self.0[seg + 1];
        let seg_len = cum[seg + 1] - cum[seg];
        let t = if seg_len > 0.0 {
            (s - cum[seg]) / seg_len
        } else {
            0.0
        };
        let tangent = (b - a).normalized().unwrap_or(Point::new(1.0, 0.0));
        (a.lerp(b, t.clamp(0.0, 1.0)), tangent)
    }

    /// Resample to `n` points evenly spaced by arc length. Endpoints are kept bit-exact.
    pub fn resample(&self, n: usize) -> Result<Polyline2D, GeometryError> {
        if n < 2 {
            return Err(GeometryError::TooFewPoints(n));
        }
        let cum = self.cumulative_lengths();
        let total = *cum.last().unwrap();
        if total <= VERTEX_EPS {
            return Err(GeometryError::ZeroLength);
        }
        let mut out = Vec::with_capacity(n);
        out.push(self.first());
        let mut seg = 0;
        for k in 1..n - 1 {
            let target = total * k as f64 / (n - 1) as f64;
            while seg + 1 < cum.len() - 1 && cum[seg + 1] < target {
                seg += 1;
            }
            let seg_len = cum[seg + 1] - cum[seg];
            let t = ((target - cum[seg]) / seg_len).clamp(0.0, 1.0);
            out.push(self.0[seg].lerp(self.0[seg + 1], t));
        }
        out.push(self.last());
        Ok(Polyline2D(out))
    }

    /// Largest distance between corresponding points after resampling both to `n`.
    pub fn max_deviation(&self, other: &Polyline2D, n: usize) -> f64 {
        match (self.resample(n), other.resample(n)) {
            (Ok(a), Ok(b)) => a
                .points()
                .iter()
                .zip(b.points())
                .map(|(p, q)| p.dist(*q))
                .fold(0.0, f64::max),
            _ => f64::INFINITY,
        }
    }

    /// Mean distance between corresponding points after resampling both to `n`.
    pub fn mean_deviation(&self, other: &Polyline2D, n: usize) -> f64 {
        match (self.resample(n), other.resample(n)) {
            (Ok(a), Ok(b)) => {
                a.points()
                    .iter()
                    .zip(b.points())
                    .map(|(p, q)| p.dist(*q))
                    .sum::<f64>()
                    / n as f64
            }
            _ => f64::INFINITY,
        }
    }

    /// Heading change between the first and the last segment, wrapped to (-pi, pi].
    pub fn heading_delta(&self) -> f64 {
        let n = self.0.len();
        let start = self.0[1] - self.0[0];
        let end = self.0[n - 1] - self.0[n - 2];
        wrap_angle(end.y.atan2(end.x) - start.y.atan2(start.x))
    }

    /// Concatenate `other` after `self`, dropping `other`'s first vertex if it
    /// coincides with `self`'s last vertex within `joint_tol`.
    pub fn concat(&self, other: &Polyline2D, joint_tol: f64) -> Polyline2D {
        let mut pts = self.0.clone();
        let skip = usize::from(self.last().dist(other.first()) <= joint_tol);
        pts.extend(other.0.iter().skip(skip).copied());
        Polyline2D::from_points_dedup(pts).unwrap_or_else(|_| self.clone())
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % std::f64::consts::TAU;
    if a <= -std::f64::consts::PI {
        a += std::f64::consts::TAU;
    } else if a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    }
    a
}

/// Signed shoelace area; positive for counterclockwise rings.
pub fn signed_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    acc / 2.0
}

/// Ring formed by walking the right boundary forward and the left one backward.
/// For a correctly oriented element this ring is counterclockwise.
pub fn boundary_ring(left: &Polyline2D, right: &Polyline2D) -> Vec<Point> {
    let mut ring: Vec<Point> = right.points().to_vec();
    ring.extend(left.points().iter().rev().copied());
    ring.dedup_by(|a, b| (*a - *b).norm() <= VERTEX_EPS);
    if ring.len() > 1 && (ring[0] - ring[ring.len() - 1]).norm() <= VERTEX_EPS {
        ring.pop();
    }
    ring
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) - VERTEX_EPS
        && p.x <= a.x.max(b.x) + VERTEX_EPS
        && p.y >= a.y.min(b.y) - VERTEX_EPS
        && p.y <= a.y.max(b.y) + VERTEX_EPS
}

/// Closed-segment intersection test.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1.abs() <= VERTEX_EPS && on_segment(c, d, a))
        || (d2.abs() <= VERTEX_EPS && on_segment(c, d, b))
        || (d3.abs() <= VERTEX_EPS && on_segment(a, b, c))
        || (d4.abs() <= VERTEX_EPS && on_segment(a, b, d))
}

/// True if no two non-adjacent edges of the closed ring intersect.
pub fn is_simple_ring(ring: &[Point]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        for j in i + 1..n {
            // skip adjacent edges
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Even-odd point-in-polygon test.
pub fn point_in_ring(p: Point, ring: &[Point]) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Clip `subject` against a convex counterclockwise `clip` ring (Sutherland-Hodgman).
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut output = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if output.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % n]);
        let input = std::mem::take(&mut output);
        let inside = |p: Point| orient(a, b, p) >= 0.0;
        for k in 0..input.len() {
            let cur = input[k];
            let prev = input[(k + input.len() - 1) % input.len()];
            match (inside(prev), inside(cur)) {
                (true, true) => output.push(cur),
                (true, false) => output.push(line_intersection(prev, cur, a, b)),
                (false, true) => {
                    output.push(line_intersection(prev, cur, a, b));
                    output.push(cur);
                }
                (false, false) => {}
            }
        }
    }
    output
}

fn line_intersection(p: Point, q: Point, a: Point, b: Point) -> Point {
    let r = q - p;
    let s = b - a;
    let denom = r.cross(s);
    if denom.abs() < 1e-15 {
        return q;
    }
    let t = (a - p).cross(s) / denom;
    p + r * t
}

/// Area of overlap between a simple polygon and a convex polygon.
pub fn overlap_area(subject: &[Point], convex: &[Point]) -> f64 {
    let mut clip = convex.to_vec();
    if signed_area(&clip) < 0.0 {
        clip.reverse();
    }
    let mut subj = subject.to_vec();
    if signed_area(&subj) < 0.0 {
        subj.reverse();
    }
    signed_area(&clip_convex(&subj, &clip)).abs()
}

/// Intersection over union of a simple polygon with a convex polygon.
pub fn iou_with_convex(subject: &[Point], convex: &[Point]) -> f64 {
    let inter = overlap_area(subject, convex);
    let union = signed_area(subject).abs() + signed_area(convex).abs() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

pub fn segment_segment_distance(a: Point, b: Point, c: Point, d: Point) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Smallest distance between two open polylines given as point slices.
pub fn path_distance(p: &[Point], q: &[Point]) -> f64 {
    let mut best = f64::INFINITY;
    let seg = |s: &[Point]| -> Vec<(Point, Point)> {
        if s.len() == 1 {
            vec![(s[0], s[0])]
        } else {
            s.windows(2).map(|w| (w[0], w[1])).collect()
        }
    };
    for (a, b) in seg(p) {
        for (c, d) in seg(q) {
            best = best.min(segment_segment_distance(a, b, c, d));
        }
    }
    best
}

/// Smallest distance between a closed polygon (including its interior) and a path.
pub fn ring_path_distance(ring: &[Point], path: &[Point]) -> f64 {
    if path.iter().any(|p| point_in_ring(*p, ring)) {
        return 0.0;
    }
    let mut closed = ring.to_vec();
    closed.push(ring[0]);
    path_distance(&closed, path)
}
