//! Keypoint JSON: `{"subject", "fps", "joints": [names], "frames": [[[x, y], ..], ..]}`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::{Point, PoseSequence, SkeletonTopology};

/// File joints remapped to this name are dropped.
pub const DROP_JOINT: &str = "_";

#[derive(Serialize, Deserialize)]
struct KeypointFile {
    subject: String,
    fps: f64,
    joints: Vec<String>,
    frames: Vec<Vec<Vec<f64>>>,
}

/// Reads a keypoint file and reorders its joints onto `topology`. File joint
/// names are looked up in `remap` first; unmapped names must match exactly.
pub fn load_keypoints(
    path: &Path,
    topology: &Arc<SkeletonTopology>,
    remap: &BTreeMap<String, String>,
) -> Result<PoseSequence> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
    let file: KeypointFile = serde_json::from_value(value).map_err(|e| Error::schema(path, e))?;

    // file column -> topology joint
    let mut columns: Vec<Option<usize>> = Vec::with_capacity(file.joints.len());
    let mut seen = vec![false; topology.n_joints()];
    for name in &file.joints {
        let target = remap.get(name).map(String::as_str).unwrap_or(name);
        if target == DROP_JOINT {
            columns.push(None);
            continue;
        }
        let j = topology.joint_index(target).ok_or_else(|| Error::JointMismatch {
            path: path.to_path_buf(),
            joint: name.clone(),
        })?;
        if std::mem::replace(&mut seen[j], true) {
            return Err(Error::schema(path, format!("joint {target:?} appears twice")));
        }
        columns.push(Some(j));
    }
    if let Some(j) = seen.iter().position(|s| !s) {
        return Err(Error::JointMismatch {
            path: path.to_path_buf(),
            joint: topology.joints()[j].clone(),
        });
    }
    if file.frames.is_empty() {
        return Err(Error::schema(path, "no frames"));
    }

    let mut frames = Vec::with_capacity(file.frames.len());
    for (t, raw) in file.frames.iter().enumerate() {
        if raw.len() != file.joints.len() {
            return Err(Error::schema(
                path,
                format!("frame {t} has {} points, expected {}", raw.len(), file.joints.len()),
            ));
        }
        let mut frame: Vec<Point> = vec![[0.0; 2]; topology.n_joints()];
        for (col, xy) in raw.iter().enumerate() {
            let name = &file.joints[col];
            if xy.len() != 2 {
                return Err(Error::schema(
                    path,
                    format!("frame {t} joint {name:?} has {} coordinates", xy.len()),
                ));
            }
            if !xy[0].is_finite() || !xy[1].is_finite() {
                return Err(Error::schema(path, format!("frame {t} joint {name:?} is not finite")));
            }
            if let Some(j) = columns[col] {
                frame[j] = [xy[0], xy[1]];
            }
        }
        frames.push(frame);
    }
    PoseSequence::new(file.subject, file.fps, frames, topology.clone())
}

pub fn write_keypoints(path: &Path, seq: &PoseSequence) -> Result<()> {
    let file = KeypointFile {
        subject: seq.subject_id().to_string(),
        fps: seq.fps(),
        joints: seq.topology().joints().to_vec(),
        frames: seq.frames().map(|f| f.iter().map(|p| p.to_vec()).collect()).collect(),
    };
    let json = serde_json::to_string(&file).expect("keypoints serialize");
    fs::write(path, json).map_err(|e| Error::io(path, e))
}
