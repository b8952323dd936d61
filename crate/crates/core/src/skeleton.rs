//! Skeleton topology, the five-part body partition, pose sequences and labels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A 2D point `[x, y]`.
pub type Point = [f64; 2];

/// Minimum mean scale-bone length accepted by [`normalize_sequence`].
pub const MIN_SCALE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BodyPart {
    LeftArm,
    RightArm,
    LeftLeg,
    RightLeg,
    HeadTorso,
}

impl BodyPart {
    /// Canonical order, also the order of entries in a score vector.
    pub const ALL: [BodyPart; 5] = [
        BodyPart::LeftArm,
        BodyPart::RightArm,
        BodyPart::LeftLeg,
        BodyPart::RightLeg,
        BodyPart::HeadTorso,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            BodyPart::LeftArm => "LeftArm",
            BodyPart::RightArm => "RightArm",
            BodyPart::LeftLeg => "LeftLeg",
            BodyPart::RightLeg => "RightLeg",
            BodyPart::HeadTorso => "HeadTorso",
        }
    }

    /// Column name used in score files.
    pub fn column(self) -> &'static str {
        match self {
            BodyPart::LeftArm => "left_arm",
            BodyPart::RightArm => "right_arm",
            BodyPart::LeftLeg => "left_leg",
            BodyPart::RightLeg => "right_leg",
            BodyPart::HeadTorso => "head_torso",
        }
    }

    pub fn is_limb(self) -> bool {
        self != BodyPart::HeadTorso
    }
}

impl fmt::Display for BodyPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BodyPart {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BodyPart::ALL
            .into_iter()
            .find(|p| p.name() == s || p.column() == s)
            .ok_or_else(|| format!("unknown body part {s:?}"))
    }
}

/// Fidgety-movement label. FM+ (present) codes to 0, FM- (absent) to 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FmLabel {
    #[serde(rename = "FM+")]
    FmPlus,
    #[serde(rename = "FM-")]
    FmMinus,
}

impl FmLabel {
    pub fn code(self) -> u8 {
        match self {
            FmLabel::FmPlus => 0,
            FmLabel::FmMinus => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(FmLabel::FmPlus),
            1 => Some(FmLabel::FmMinus),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FmLabel::FmPlus => "FM+",
            FmLabel::FmMinus => "FM-",
        }
    }

    /// Video-level reading of the label.
    pub fn verdict(self) -> &'static str {
        match self {
            FmLabel::FmPlus => "normal",
            FmLabel::FmMinus => "abnormal",
        }
    }
}

impl fmt::Display for FmLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FmLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "FM+" | "FMPlus" | "normal" | "0" => Ok(FmLabel::FmPlus),
            "FM-" | "FMMinus" | "abnormal" | "1" => Ok(FmLabel::FmMinus),
            other => Err(format!("unknown FM label {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoAnnotation {
    pub subject_id: String,
    pub label: FmLabel,
}

/// A bone as `(proximal joint, distal joint)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bone(pub usize, pub usize);

impl Bone {
    pub fn proximal(self) -> usize {
        self.0
    }

    pub fn distal(self) -> usize {
        self.1
    }
}

/// Joints and bones (as indices into the topology's lists) owned by one part.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartMembers {
    pub joints: Vec<usize>,
    pub bones: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct TopologyFile {
    joints: Vec<String>,
    bones: Vec<Bone>,
    parts: BTreeMap<BodyPart, PartMembers>,
    scale_bone: Bone,
}

/// Joint set, bones, and the partition of both into the five body parts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TopologyFile", into = "TopologyFile")]
pub struct SkeletonTopology {
    joints: Vec<String>,
    bones: Vec<Bone>,
    parts: [PartMembers; 5],
    scale_bone: Bone,
    joint_part: Vec<BodyPart>,
    bone_part: Vec<BodyPart>,
}

impl TryFrom<TopologyFile> for SkeletonTopology {
    type Error = Error;

    fn try_from(file: TopologyFile) -> Result<Self> {
        let mut parts: [PartMembers; 5] = Default::default();
        for part in BodyPart::ALL {
            parts[part.index()] = file
                .parts
                .get(&part)
                .cloned()
                .ok_or_else(|| Error::InvalidTopology(format!("missing part {part}")))?;
        }
        SkeletonTopology::new(file.joints, file.bones, parts, file.scale_bone)
    }
}

impl From<SkeletonTopology> for TopologyFile {
    fn from(t: SkeletonTopology) -> Self {
        TopologyFile {
            parts: BodyPart::ALL
                .into_iter()
                .map(|p| (p, t.parts[p.index()].clone()))
                .collect(),
            joints: t.joints,
            bones: t.bones,
            scale_bone: t.scale_bone,
        }
    }
}

impl SkeletonTopology {
    /// Builds a topology, checking that the parts partition joints and bones.
    pub fn new(joints: Vec<String>, bones: Vec<Bone>, parts: [PartMembers; 5], scale_bone: Bone) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidTopology(msg));
        let names: BTreeSet<&str> = joints.iter().map(String::as_str).collect();
        if names.len() != joints.len() {
            return bad("duplicate joint names".into());
        }
        for (i, b) in bones.iter().enumerate() {
            if b.0 >= joints.len() || b.1 >= joints.len() {
                return bad(format!("bone {i} references a missing joint"));
            }
            if b.0 == b.1 {
                return bad(format!("bone {i} connects a joint to itself"));
            }
        }
        if !bones.contains(&scale_bone) {
            return bad("scale_bone is not one of the bones".into());
        }

        let mut joint_part: Vec<Option<BodyPart>> = vec![None; joints.len()];
        let mut bone_part: Vec<Option<BodyPart>> = vec![None; bones.len()];
        for part in BodyPart::ALL {
            let members = &parts[part.index()];
            for &j in &members.joints {
                match joint_part.get_mut(j) {
                    None => return bad(format!("{part} lists missing joint {j}")),
                    Some(Some(other)) => return bad(format!("joint {} is in both {other} and {part}", joints[j])),
                    Some(slot) => *slot = Some(part),
                }
            }
            for &b in &members.bones {
                match bone_part.get_mut(b) {
                    None => return bad(format!("{part} lists missing bone {b}")),
                    Some(Some(other)) => return bad(format!("bone {b} is in both {other} and {part}")),
                    Some(slot) => *slot = Some(part),
                }
            }
        }
        let joint_part = joint_part
            .into_iter()
            .enumerate()
            .map(|(j, p)| p.ok_or_else(|| Error::InvalidTopology(format!("joint {} has no part", joints[j]))))
            .collect::<Result<Vec<_>>>()?;
        let bone_part = bone_part
            .into_iter()
            .enumerate()
            .map(|(b, p)| p.ok_or_else(|| Error::InvalidTopology(format!("bone {b} has no part"))))
            .collect::<Result<Vec<_>>>()?;

        Ok(SkeletonTopology {
            joints,
            bones,
            parts,
            scale_bone,
            joint_part,
            bone_part,
        })
    }

    pub fn joints(&self) -> &[String] {
        &self.joints
    }

    pub fn n_joints(&self) -> usize {
        self.joints.len()
    }

    pub fn bones(&self) -> &[Bone] {
        &self.bones
    }

    pub fn scale_bone(&self) -> Bone {
        self.scale_bone
    }

    pub fn members(&self, part: BodyPart) -> &PartMembers {
        &self.parts[part.index()]
    }

    /// Bones of `part`, resolved to joint pairs.
    pub fn part_bones(&self, part: BodyPart) -> impl Iterator<Item = Bone> + '_ {
        self.parts[part.index()].bones.iter().map(|&b| self.bones[b])
    }

    pub fn part_of_joint(&self, joint: usize) -> BodyPart {
        self.joint_part[joint]
    }

    pub fn part_of_bone(&self, bone: usize) -> BodyPart {
        self.bone_part[bone]
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j == name)
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("topology serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// The built-in 15-joint, 12-bone topology.
///
/// Limb-internal bones belong to the limbs; head-neck, neck-pelvis and the two
/// pelvis-hip bones belong to HeadTorso. Shoulders attach to no torso bone.
pub fn default_topology() -> SkeletonTopology {
    let joints: Vec<String> = [
        "head",
        "neck",
        "pelvis",
        "left_shoulder",
        "left_elbow",
        "left_wrist",
        "left_hip",
        "left_knee",
        "left_ankle",
        "right_shoulder",
        "right_elbow",
        "right_wrist",
        "right_hip",
        "right_knee",
        "right_ankle",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let bones = vec![
        Bone(0, 1),   // head-neck
        Bone(1, 2),   // neck-pelvis
        Bone(2, 6),   // pelvis-left_hip
        Bone(2, 12),  // pelvis-right_hip
        Bone(3, 4),   // left shoulder-elbow
        Bone(4, 5),   // left elbow-wrist
        Bone(9, 10),  // right shoulder-elbow
        Bone(10, 11), // right elbow-wrist
        Bone(6, 7),   // left hip-knee
        Bone(7, 8),   // left knee-ankle
        Bone(12, 13), // right hip-knee
        Bone(13, 14), // right knee-ankle
    ];
    let members = |joints: &[usize], bones: &[usize]| PartMembers {
        joints: joints.to_vec(),
        bones: bones.to_vec(),
    };
    let parts = [
        members(&[3, 4, 5], &[4, 5]),
        members(&[9, 10, 11], &[6, 7]),
        members(&[6, 7, 8], &[8, 9]),
        members(&[12, 13, 14], &[10, 11]),
        members(&[0, 1, 2], &[0, 1, 2, 3]),
    ];
    SkeletonTopology::new(joints, bones, parts, Bone(1, 2)).expect("default topology is valid")
}

/// Per-frame 2D joint coordinates for one video.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseSequence {
    subject_id: String,
    fps: f64,
    n_joints: usize,
    points: Vec<Point>,
    topology: Arc<SkeletonTopology>,
}

impl PoseSequence {
    pub fn new(
        subject_id: impl Into<String>,
        fps: f64,
        frames: Vec<Vec<Point>>,
        topology: Arc<SkeletonTopology>,
    ) -> Result<Self> {
        let n_joints = topology.n_joints();
        if frames.is_empty() {
            return Err(Error::InvalidSequence("sequence has no frames".into()));
        }
        let mut points = Vec::with_capacity(frames.len() * n_joints);
        for (t, frame) in frames.into_iter().enumerate() {
            if frame.len() != n_joints {
                return Err(Error::InvalidSequence(format!(
                    "frame {t} has {} points, expected {n_joints}",
                    frame.len()
                )));
            }
            if let Some(j) = frame.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
                return Err(Error::InvalidSequence(format!(
                    "frame {t} joint {j} has a non-finite coordinate"
                )));
            }
            points.extend(frame);
        }
        Ok(PoseSequence {
            subject_id: subject_id.into(),
            fps,
            n_joints,
            points,
            topology,
        })
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn n_frames(&self) -> usize {
        self.points.len() / self.n_joints
    }

    pub fn n_joints(&self) -> usize {
        self.n_joints
    }

    pub fn topology(&self) -> &Arc<SkeletonTopology> {
        &self.topology
    }

    pub fn frame(&self, t: usize) -> &[Point] {
        &self.points[t * self.n_joints..(t + 1) * self.n_joints]
    }

    pub fn joint(&self, t: usize, j: usize) -> Point {
        self.points[t * self.n_joints + j]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[Point]> {
        self.points.chunks_exact(self.n_joints)
    }

    /// Applies `f` to every point, keeping everything else.
    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> Self {
        PoseSequence {
            points: self.points.iter().map(|&p| f(p)).collect(),
            ..self.clone()
        }
    }

    pub fn with_subject_id(mut self, subject_id: impl Into<String>) -> Self {
        self.subject_id = subject_id.into();
        self
    }

    /// Mean length of the topology's scale bone over all frames.
    pub fn mean_scale_length(&self) -> f64 {
        let Bone(a, b) = self.topology.scale_bone();
        let total: f64 = self
            .frames()
            .map(|f| (f[b][0] - f[a][0]).hypot(f[b][1] - f[a][1]))
            .sum();
        total / self.n_frames() as f64
    }
}

/// Divides every coordinate by the mean scale-bone length. No translation is
/// applied, so inter-frame displacements keep their direction.
pub fn normalize_sequence(seq: &PoseSequence) -> Result<PoseSequence> {
    let scale = seq.mean_scale_length();
    if scale.is_nan() || scale <= MIN_SCALE {
        return Err(Error::DegenerateScale(scale));
    }
    Ok(seq.map_points(|[x, y]| [x / scale, y / scale]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq_from(frames: Vec<Vec<Point>>) -> PoseSequence {
        PoseSequence::new("s", 30.0, frames, Arc::new(default_topology())).unwrap()
    }

    fn posed(scale: f64) -> Vec<Point> {
        (0..15)
            .map(|j| [j as f64 * 0.3 * scale, (j % 4) as f64 * scale])
            .collect::<Vec<_>>()
            .into_iter()
            .enumerate()
            .map(|(j, p)| match j {
                1 => [0.0, 0.0],
                2 => [0.0, 2.0 * scale],
                _ => p,
            })
            .collect()
    }

    #[test]
    fn default_topology_shape() {
        let t = default_topology();
        assert_eq!(t.n_joints(), 15);
        assert_eq!(t.bones().len(), 12);
        let bones_per_part: Vec<usize> = BodyPart::ALL.iter().map(|&p| t.members(p).bones.len()).collect();
        assert_eq!(bones_per_part, vec![2, 2, 2, 2, 4]);
        assert_eq!(t.part_of_joint(t.joint_index("left_wrist").unwrap()), BodyPart::LeftArm);
        assert_eq!(t.part_of_joint(t.joint_index("pelvis").unwrap()), BodyPart::HeadTorso);
        assert_eq!(t.scale_bone(), Bone(1, 2));
    }

    #[test]
    fn partition_covers_everything_once() {
        let t = default_topology();
        let joints: usize = BodyPart::ALL.iter().map(|&p| t.members(p).joints.len()).sum();
        let bones: usize = BodyPart::ALL.iter().map(|&p| t.members(p).bones.len()).sum();
        assert_eq!(joints, t.n_joints());
        assert_eq!(bones, t.bones().len());
    }

    #[test]
    fn topology_json_round_trip_and_validation() {
        let t = default_topology();
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains("\"scale_bone\":[1,2]"));
        let back: SkeletonTopology = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);

        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["parts"]["LeftArm"]["joints"] = serde_json::json!([3, 4, 5, 0]);
        assert!(serde_json::from_value::<SkeletonTopology>(v).is_err());
    }

    #[test]
    fn rejects_uncovered_joint_and_foreign_scale_bone() {
        let t = default_topology();
        let mut parts: [PartMembers; 5] = Default::default();
        for p in BodyPart::ALL {
            parts[p.index()] = t.members(p).clone();
        }
        let mut missing = parts.clone();
        missing[4].joints.pop();
        assert!(SkeletonTopology::new(t.joints().to_vec(), t.bones().to_vec(), missing, Bone(1, 2)).is_err());
        assert!(SkeletonTopology::new(t.joints().to_vec(), t.bones().to_vec(), parts, Bone(0, 2)).is_err());
    }

    #[test]
    fn sequence_validation() {
        let topo = Arc::new(default_topology());
        assert!(PoseSequence::new("s", 30.0, vec![], topo.clone()).is_err());
        assert!(PoseSequence::new("s", 30.0, vec![vec![[0.0, 0.0]; 14]], topo.clone()).is_err());
        let mut frame = vec![[0.0, 0.0]; 15];
        frame[3][1] = f64::NAN;
        assert!(PoseSequence::new("s", 30.0, vec![frame], topo).is_err());
    }

    #[test]
    fn normalize_halves_constant_length_two() {
        let raw = seq_from(vec![posed(1.0); 4]);
        assert!((raw.mean_scale_length() - 2.0).abs() < 1e-12);
        let n = normalize_sequence(&raw).unwrap();
        for t in 0..4 {
            for j in 0..15 {
                let (a, b) = (raw.joint(t, j), n.joint(t, j));
                assert_eq!(b, [a[0] / 2.0, a[1] / 2.0]);
            }
        }
        assert!((n.mean_scale_length() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn normalize_is_idempotent() {
        let raw = seq_from(vec![posed(3.7), posed(4.1)]);
        let once = normalize_sequence(&raw).unwrap();
        let twice = normalize_sequence(&once).unwrap();
        for (a, b) in once.frames().flatten().zip(twice.frames().flatten()) {
            assert!((a[0] - b[0]).abs() <= 1e-9 * a[0].abs().max(1.0));
            assert!((a[1] - b[1]).abs() <= 1e-9 * a[1].abs().max(1.0));
        }
    }

    #[test]
    fn coincident_joints_are_degenerate() {
        let raw = seq_from(vec![vec![[5.0, 5.0]; 15]; 3]);
        assert!(matches!(normalize_sequence(&raw), Err(Error::DegenerateScale(_))));
    }

    #[test]
    fn normalize_commutes_with_translation() {
        let raw = seq_from(vec![posed(2.5), posed(2.0)]);
        let c = [13.0, -7.5];
        let scale = raw.mean_scale_length();
        let shifted = normalize_sequence(&raw.map_points(|p| [p[0] + c[0], p[1] + c[1]])).unwrap();
        let base = normalize_sequence(&raw).unwrap();
        for (a, b) in shifted.frames().flatten().zip(base.frames().flatten()) {
            assert!((a[0] - (b[0] + c[0] / scale)).abs() < 1e-12);
            assert!((a[1] - (b[1] + c[1] / scale)).abs() < 1e-12);
        }
    }

    #[test]
    fn label_coding() {
        assert_eq!(FmLabel::FmPlus.code(), 0);
        assert_eq!(FmLabel::FmMinus.code(), 1);
        assert_eq!("FM-".parse::<FmLabel>().unwrap(), FmLabel::FmMinus);
        assert_eq!(FmLabel::FmMinus.verdict(), "abnormal");
        assert_eq!(serde_json::to_string(&FmLabel::FmPlus).unwrap(), "\"FM+\"");
    }
}
