use serde::{Deserialize, Serialize};

use crate::error::MapError;
use crate::geometry::Point;

/// Vehicle pose along a recorded trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoPose {
    pub timestamp_ns: i64,
    pub x: f64,
    pub y: f64,
    pub heading_rad: f64,
}

impl EgoPose {
    pub fn new(timestamp_ns: i64, x: f64, y: f64, heading_rad: f64) -> Self {
        Self {
            timestamp_ns,
            x,
            y,
            heading_rad,
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }

    /// Map frame to ego frame (x forward, y left).
    pub fn to_ego(&self, p: Point) -> Point {
        (p - self.position()).rotate(-self.heading_rad)
    }

    pub fn to_map(&self, p: Point) -> Point {
        p.rotate(self.heading_rad) + self.position()
    }
}

/// Parse a JSON array of poses and check finiteness and strictly increasing
/// timestamps.
pub fn parse_poses(bytes: &[u8]) -> Result<Vec<EgoPose>, MapError> {
    let poses: Vec<EgoPose> = serde_json::from_slice(bytes)?;
    for (i, p) in poses.iter().enumerate() {
        if ![p.x, p.y, p.heading_rad].iter().all(|v| v.is_finite()) {
            return Err(MapError::schema(format!("$[{i}]"), "non-finite pose"));
        }
        if i > 0 && poses[i - 1].timestamp_ns >= p.timestamp_ns {
            return Err(MapError::schema(
                format!("$[{i}].timestamp_ns"),
                "timestamps must be strictly increasing",
            ));
        }
    }
    Ok(poses)
}

pub fn serialize_poses(poses: &[EgoPose]) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(poses).expect("poses serialize");
    out.push(b'\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ego_transform_roundtrip() {
        let pose = EgoPose::new(0, 3.0, -2.0, 0.7);
        let p = Point::new(10.0, 5.0);
        let back = pose.to_map(pose.to_ego(p));
        assert!(back.dist(p) < 1e-12);
        // a point straight ahead of the vehicle lands on the ego x axis
        let ahead = pose.to_map(Point::new(4.0, 0.0));
        let e = pose.to_ego(ahead);
        assert!((e.x - 4.0).abs() < 1e-12 && e.y.abs() < 1e-12);
    }

    #[test]
    fn rejects_non_increasing_timestamps() {
        let doc = br#"[{"timestamp_ns": 5, "x": 0, "y": 0, "heading_rad": 0},
                      {"timestamp_ns": 5, "x": 1, "y": 0, "heading_rad": 0}]"#;
        assert!(parse_poses(doc).is_err());
    }

    #[test]
    fn poses_roundtrip() {
        let poses = vec![
            EgoPose::new(1, 0.5, 1.5, 0.1),
            EgoPose::new(2, 1.0, 2.0, -0.2),
        ];
        assert_eq!(parse_poses(&serialize_poses(&poses)).unwrap(), poses);
    }
}
