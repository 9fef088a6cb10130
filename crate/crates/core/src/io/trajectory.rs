use std::fs;
use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use crate::camera::Pose;
use crate::error::{Error, Result};

/// Quaternions further than this from unit norm are rejected.
const UNIT_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedPose {
    pub timestamp: f64,
    pub pose: Pose,
}

/// Parse `timestamp tx ty tz qx qy qz qw` lines (world-from-camera).
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_trajectory(text: &str, path: &Path) -> Result<Vec<TimedPose>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let vals = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| err(format!("bad number {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != 8 {
            return Err(err(format!("expected 8 fields, found {}", vals.len())));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(err("non-finite value".into()));
        }
        let q = Quaternion::new(vals[7], vals[4], vals[5], vals[6]);
        let norm = q.norm();
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(err(format!("quaternion norm {norm} is not unit")));
        }
        let pose = Pose::from_quaternion(
            &UnitQuaternion::from_quaternion(q),
            Vector3::new(vals[1], vals[2], vals[3]),
        );
        out.push(TimedPose {
            timestamp: vals[0],
            pose,
        });
    }
    Ok(out)
}

pub fn load_trajectory(path: &Path) -> Result<Vec<TimedPose>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory(&text, path)
}

pub fn save_trajectory(path: &Path, poses: &[TimedPose]) -> Result<()> {
    let mut s = String::new();
    for tp in poses {
        let t = tp.pose.translation();
        let q = tp.pose.quaternion();
        s.push_str(&format!(
            "{} {} {} {} {} {} {} {}\n",
            tp.timestamp, t.x, t.y, t.z, q.i, q.j, q.k, q.w
        ));
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}
