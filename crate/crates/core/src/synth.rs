//! Seeded synthetic infant pose sequences with known per-part behaviour.
//!
//! Fidgety parts wander in small steps whose directions cover every bin
//! evenly; monotonous parts oscillate rigidly along one axis; still parts only
//! carry jitter below the displacement threshold. A video is FM- as soon as one
//! part is not fidgety.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{displacement_histograms, segment_windows, HistogramConfig, SegmentationScheme};
use crate::rng;
use crate::skeleton::{normalize_sequence, BodyPart, FmLabel, Point, PoseSequence, SkeletonTopology, VideoAnnotation};

/// Step length of fidgety joints, in units of the neck-pelvis length.
pub const FIDGET_STEP: f64 = 0.02;
/// Fidgety joints stay within this distance of their rest position.
pub const FIDGET_RADIUS: f64 = 0.06;
pub const MONOTONOUS_AMPLITUDE: f64 = 0.05;
pub const MONOTONOUS_PERIOD: f64 = 25.0;
/// Pixels per neck-pelvis length when writing keypoints.
pub const PIXEL_SCALE: f64 = 160.0;
/// Pixel position of the neck at rest.
pub const PIXEL_ORIGIN: Point = [320.0, 110.0];
/// Frame size matching the pixel placement above.
pub const CANVAS: (u32, u32) = (640, 480);
/// Rest-pose bone directions sit this far past a bin edge.
const EDGE_OFFSET: f64 = 0.03;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Behavior {
    Fidgety,
    Monotonous,
    Still,
}

impl Behavior {
    /// Ground-truth FM label of a part showing this behaviour.
    pub fn label(self) -> FmLabel {
        match self {
            Behavior::Fidgety => FmLabel::FmPlus,
            _ => FmLabel::FmMinus,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectProfile {
    pub subject_id: String,
    /// Behaviour of each part, in [`BodyPart::ALL`] order.
    pub behaviors: [Behavior; 5],
    pub frames: usize,
    /// Standard deviation of Gaussian noise on fidgety and monotonous joints.
    pub noise: f64,
    pub seed: u64,
}

impl SubjectProfile {
    pub fn uniform(subject_id: impl Into<String>, behavior: Behavior, frames: usize, seed: u64) -> Self {
        SubjectProfile {
            subject_id: subject_id.into(),
            behaviors: [behavior; 5],
            frames,
            noise: CohortSpec::default().noise,
            seed,
        }
    }

    pub fn label(&self) -> FmLabel {
        if self.behaviors.iter().all(|&b| b == Behavior::Fidgety) {
            FmLabel::FmPlus
        } else {
            FmLabel::FmMinus
        }
    }

    pub fn behavior(&self, part: BodyPart) -> Behavior {
        self.behaviors[part.index()]
    }
}

fn dir(angle: f64) -> Point {
    [angle.cos(), angle.sin()]
}

fn add(a: Point, b: Point, scale: f64) -> Point {
    [a[0] + scale * b[0], a[1] + scale * b[1]]
}

/// Rest pose of a supine infant in image coordinates (y down), with the
/// neck-pelvis length as unit. Every bone points just past a bin edge, so small
/// wobbles spread its orientation over two bins while a still bone stays in one.
fn rest_position(name: &str) -> Option<Point> {
    let e = EDGE_OFFSET;
    let neck = [0.0, 0.0];
    let pelvis = add(neck, dir(FRAC_PI_2 + e), 1.0);
    let left_hip = add(pelvis, dir(e), 0.25);
    let right_hip = add(pelvis, dir(PI + e), 0.25);
    let left_knee = add(left_hip, dir(FRAC_PI_4 + e), 0.45);
    let right_knee = add(right_hip, dir(3.0 * FRAC_PI_4 + e), 0.45);
    let left_shoulder = [0.4, 0.1];
    let right_shoulder = [-0.4, 0.1];
    let left_elbow = add(left_shoulder, dir(FRAC_PI_4 + e), 0.35);
    let right_elbow = add(right_shoulder, dir(3.0 * FRAC_PI_4 + e), 0.35);
    Some(match name {
        "neck" => neck,
        "pelvis" => pelvis,
        "head" => add(neck, dir(FRAC_PI_2 + e), -0.4),
        "left_hip" => left_hip,
        "right_hip" => right_hip,
        "left_knee" => left_knee,
        "right_knee" => right_knee,
        "left_ankle" => add(left_knee, dir(FRAC_PI_2 + e), 0.4),
        "right_ankle" => add(right_knee, dir(FRAC_PI_2 + e), 0.4),
        "left_shoulder" => left_shoulder,
        "right_shoulder" => right_shoulder,
        "left_elbow" => left_elbow,
        "right_elbow" => right_elbow,
        "left_wrist" => add(left_elbow, dir(7.0 * FRAC_PI_4 + e), 0.3),
        "right_wrist" => add(right_elbow, dir(5.0 * FRAC_PI_4 + e), 0.3),
        _ => return None,
    })
}

/// Offsets (normalized units) of one part's joints over time: `[frame][joint]`.
fn part_offsets<R: Rng>(
    behavior: Behavior,
    n_joints: usize,
    frames: usize,
    noise: f64,
    rng: &mut R,
) -> Vec<Vec<Point>> {
    let mut out = vec![vec![[0.0; 2]; n_joints]; frames];
    let gauss = Normal::new(0.0, 1.0).expect("unit normal");
    match behavior {
        Behavior::Fidgety => {
            for j in 0..n_joints {
                let mut pos = [0.0; 2];
                let mut block: Vec<usize> = Vec::new();
                for row in out.iter_mut().skip(1) {
                    // directions are drawn bin by bin from shuffled blocks of all 8 bins
                    if block.is_empty() {
                        block = (0..8).collect();
                        block.shuffle(rng);
                    }
                    let bin = block.pop().expect("non-empty block");
                    let angle = (bin as f64 + rng.random::<f64>()) * TAU / 8.0;
                    let mut step = add([0.0; 2], dir(angle), FIDGET_STEP);
                    let next = add(pos, step, 1.0);
                    if next[0].hypot(next[1]) > FIDGET_RADIUS {
                        step = [-step[0], -step[1]];
                    }
                    pos = add(pos, step, 1.0);
                    row[j] = pos;
                }
            }
        }
        Behavior::Monotonous => {
            let axis = dir((rng.random_range(0..8) as f64 + 0.5) * TAU / 8.0);
            let phase = rng.random::<f64>() * TAU;
            for (t, row) in out.iter_mut().enumerate() {
                let a = MONOTONOUS_AMPLITUDE * (TAU * t as f64 / MONOTONOUS_PERIOD + phase).sin();
                row.iter_mut().for_each(|p| *p = add([0.0; 2], axis, a));
            }
        }
        Behavior::Still => {
            let limit = 0.25 * HistogramConfig::default().displacement_epsilon;
            for row in out.iter_mut() {
                for p in row.iter_mut() {
                    let v = [0.1 * limit * gauss.sample(rng), 0.1 * limit * gauss.sample(rng)];
                    let len = v[0].hypot(v[1]);
                    *p = if len > limit {
                        [v[0] * limit / len, v[1] * limit / len]
                    } else {
                        v
                    };
                }
            }
            return out;
        }
    }
    if noise > 0.0 {
        for row in out.iter_mut() {
            for p in row.iter_mut() {
                p[0] += noise * gauss.sample(rng);
                p[1] += noise * gauss.sample(rng);
            }
        }
    }
    out
}

/// Generates one subject's keypoints in pixel coordinates plus its annotation.
pub fn generate_subject(
    profile: &SubjectProfile,
    topology: &Arc<SkeletonTopology>,
) -> Result<(PoseSequence, VideoAnnotation)> {
    if profile.frames < 2 {
        return Err(Error::InvalidProfile(format!("{} frames is too few", profile.frames)));
    }
    if !(profile.noise >= 0.0 && profile.noise.is_finite()) {
        return Err(Error::InvalidProfile(format!(
            "noise must be >= 0, got {}",
            profile.noise
        )));
    }
    let rest = topology
        .joints()
        .iter()
        .map(|name| {
            rest_position(name).ok_or_else(|| Error::InvalidProfile(format!("no rest position for joint {name:?}")))
        })
        .collect::<Result<Vec<Point>>>()?;

    let mut frames: Vec<Vec<Point>> = vec![rest.clone(); profile.frames];
    for part in BodyPart::ALL {
        let joints = &topology.members(part).joints;
        let mut stream = rng::stream(profile.seed, &[part.index() as u64]);
        let offsets = part_offsets(
            profile.behavior(part),
            joints.len(),
            profile.frames,
            profile.noise,
            &mut stream,
        );
        for (frame, off) in frames.iter_mut().zip(offsets) {
            for (&j, o) in joints.iter().zip(off) {
                frame[j] = add(frame[j], o, 1.0);
            }
        }
    }
    for frame in frames.iter_mut() {
        for p in frame.iter_mut() {
            *p = add(PIXEL_ORIGIN, *p, PIXEL_SCALE);
        }
    }
    let seq = PoseSequence::new(profile.subject_id.clone(), 30.0, frames, topology.clone())?;
    let annotation = VideoAnnotation {
        subject_id: profile.subject_id.clone(),
        label: profile.label(),
    };
    Ok((seq, annotation))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortSpec {
    pub n_normal: usize,
    pub n_abnormal: usize,
    pub frames: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec {
            n_normal: 8,
            n_abnormal: 4,
            frames: 1000,
            noise: 0.0005,
            seed: 42,
        }
    }
}

/// Behaviour patterns of abnormal subjects, used in rotation. Across any three
/// of the four, every part shows both still and monotonous behaviour.
const ABNORMAL_PATTERNS: [[Behavior; 5]; 4] = {
    use Behavior::{Monotonous as M, Still as S};
    [[S, M, M, S, S], [M, S, S, M, M], [S, S, S, S, S], [M, M, M, M, M]]
};

pub fn cohort_profiles(spec: &CohortSpec) -> Vec<SubjectProfile> {
    let n = spec.n_normal + spec.n_abnormal;
    (0..n)
        .map(|i| {
            let behaviors = if i < spec.n_normal {
                [Behavior::Fidgety; 5]
            } else {
                ABNORMAL_PATTERNS[(i - spec.n_normal) % ABNORMAL_PATTERNS.len()]
            };
            SubjectProfile {
                subject_id: format!("s{:02}", i + 1),
                behaviors,
                frames: spec.frames,
                noise: spec.noise,
                seed: rng::derive_seed(spec.seed, &[i as u64]),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSubject {
    pub profile: SubjectProfile,
    pub sequence: PoseSequence,
    pub annotation: VideoAnnotation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cohort {
    pub subjects: Vec<SyntheticSubject>,
}

impl Cohort {
    /// Hex SHA-256 over ids, labels, behaviours and coordinate bits.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for s in &self.subjects {
            h.update(s.profile.subject_id.as_bytes());
            h.update([s.annotation.label.code()]);
            for b in s.profile.behaviors {
                h.update([b as u8]);
            }
            for p in s.sequence.frames().flatten() {
                h.update(p[0].to_bits().to_le_bytes());
                h.update(p[1].to_bits().to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

pub fn generate_cohort(spec: &CohortSpec, topology: &Arc<SkeletonTopology>) -> Result<Cohort> {
    if spec.n_normal + spec.n_abnormal < 2 {
        return Err(Error::InvalidProfile("a cohort needs at least 2 subjects".into()));
    }
    let subjects = cohort_profiles(spec)
        .into_iter()
        .map(|profile| {
            let (sequence, annotation) = generate_subject(&profile, topology)?;
            Ok(SyntheticSubject {
                profile,
                sequence,
                annotation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Cohort { subjects })
}

/// Per-window displacement histograms of every joint of every part, after normalization.
fn joint_histograms(
    s: &SyntheticSubject,
    scheme: &SegmentationScheme,
    cfg: &HistogramConfig,
) -> Result<Vec<(BodyPart, usize, Vec<f64>)>> {
    let seq = normalize_sequence(&s.sequence)?;
    let mut out = Vec::new();
    for (w, window) in segment_windows(seq.n_frames(), scheme)?.into_iter().enumerate() {
        for part in BodyPart::ALL {
            let joints = &seq.topology().members(part).joints;
            for h in displacement_histograms(&seq, window.clone(), joints, cfg)? {
                out.push((part, w, h));
            }
        }
    }
    Ok(out)
}

/// Checks the generator's guarantees on a cohort: fidgety joints have
/// near-uniform displacement histograms (max − min < 0.15), still joints
/// exactly uniform ones, and on every window each fidgety and each monotonous
/// joint histogram are more than 0.5 apart in L1. Returns the violations.
pub fn check_cohort(cohort: &Cohort, scheme: &SegmentationScheme, cfg: &HistogramConfig) -> Result<Vec<String>> {
    let mut problems = Vec::new();
    let mut fidgety: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut monotonous: Vec<(usize, Vec<f64>)> = Vec::new();
    let uniform = 1.0 / cfg.bins as f64;
    for s in &cohort.subjects {
        for (part, w, h) in joint_histograms(s, scheme, cfg)? {
            let id = &s.profile.subject_id;
            match s.profile.behavior(part) {
                Behavior::Fidgety => {
                    let max = h.iter().cloned().fold(f64::MIN, f64::max);
                    let min = h.iter().cloned().fold(f64::MAX, f64::min);
                    if max - min >= 0.15 {
                        problems.push(format!("{id} {part} window {w}: fidgety spread {:.3}", max - min));
                    }
                    fidgety.push((w, h));
                }
                Behavior::Still => {
                    if h.iter().any(|&v| v != uniform) {
                        problems.push(format!("{id} {part} window {w}: still joint not uniform"));
                    }
                }
                Behavior::Monotonous => monotonous.push((w, h)),
            }
        }
    }
    for (wf, f) in &fidgety {
        for (wm, m) in monotonous.iter().filter(|(wm, _)| wm == wf) {
            let l1: f64 = f.iter().zip(m).map(|(a, b)| (a - b).abs()).sum();
            if l1 <= 0.5 {
                problems.push(format!("window {wm}: fidgety/monotonous L1 distance {l1:.3}"));
            }
        }
    }
    Ok(problems)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{hojd2d, hojo2d};
    use crate::skeleton::default_topology;

    fn topo() -> Arc<SkeletonTopology> {
        Arc::new(default_topology())
    }

    #[test]
    fn rest_pose_has_unit_scale_bone() {
        let t = topo();
        let (seq, _) = generate_subject(&SubjectProfile::uniform("x", Behavior::Still, 10, 1), &t).unwrap();
        assert!((seq.mean_scale_length() / PIXEL_SCALE - 1.0).abs() < 1e-6);
    }

    #[test]
    fn all_fidgety_is_normal_and_near_uniform() {
        let t = topo();
        let profile = SubjectProfile::uniform("f", Behavior::Fidgety, 300, 9);
        let (seq, ann) = generate_subject(&profile, &t).unwrap();
        assert_eq!(ann.label, FmLabel::FmPlus);
        let seq = normalize_sequence(&seq).unwrap();
        let cfg = HistogramConfig::default();
        for part in BodyPart::ALL {
            for w in 0..3 {
                for h in hojd2d(&seq, w * 100..(w + 1) * 100, part, &cfg).unwrap() {
                    let max = h.iter().cloned().fold(0.0, f64::max);
                    let min = h.iter().cloned().fold(1.0, f64::min);
                    assert!(max - min < 0.15, "{part}: {h:?}");
                }
            }
        }
    }

    #[test]
    fn all_still_is_exactly_uniform_and_abnormal() {
        let t = topo();
        let (seq, ann) = generate_subject(&SubjectProfile::uniform("s", Behavior::Still, 200, 3), &t).unwrap();
        assert_eq!(ann.label, FmLabel::FmMinus);
        let seq = normalize_sequence(&seq).unwrap();
        for part in BodyPart::ALL {
            for h in hojd2d(&seq, 0..100, part, &HistogramConfig::default()).unwrap() {
                assert_eq!(h, vec![0.125; 8]);
            }
            // still bones never leave their bin
            for h in hojo2d(&seq, 0..100, part, &HistogramConfig::default()).unwrap() {
                assert!(h.contains(&1.0));
            }
        }
    }

    #[test]
    fn monotonous_uses_two_opposite_bins() {
        let t = topo();
        let (seq, _) = generate_subject(&SubjectProfile::uniform("m", Behavior::Monotonous, 100, 5), &t).unwrap();
        let seq = normalize_sequence(&seq).unwrap();
        for h in hojd2d(&seq, 0..100, BodyPart::LeftArm, &HistogramConfig::default()).unwrap() {
            let k = (0..8).max_by(|&a, &b| h[a].total_cmp(&h[b])).unwrap();
            assert!(h[k] + h[(k + 4) % 8] > 0.9, "{h:?}");
        }
    }

    #[test]
    fn fidgety_bones_spread_over_two_bins() {
        let t = topo();
        let (seq, _) = generate_subject(&SubjectProfile::uniform("f", Behavior::Fidgety, 1000, 11), &t).unwrap();
        let seq = normalize_sequence(&seq).unwrap();
        let mut single_bin = 0;
        let mut total = 0;
        for w in 0..10 {
            for part in BodyPart::ALL {
                for h in hojo2d(&seq, w * 100..(w + 1) * 100, part, &HistogramConfig::default()).unwrap() {
                    total += 1;
                    if h.iter().any(|&v| v > 0.97) {
                        single_bin += 1;
                    }
                }
            }
        }
        assert!(
            single_bin * 10 < total,
            "{single_bin} of {total} bone histograms stayed in one bin"
        );
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let t = topo();
        let p = SubjectProfile::uniform("d", Behavior::Fidgety, 150, 77);
        assert_eq!(generate_subject(&p, &t).unwrap(), generate_subject(&p, &t).unwrap());
        let q = SubjectProfile { seed: 78, ..p.clone() };
        assert_ne!(generate_subject(&p, &t).unwrap().0, generate_subject(&q, &t).unwrap().0);
    }

    #[test]
    fn invalid_profiles() {
        let t = topo();
        let mut p = SubjectProfile::uniform("d", Behavior::Fidgety, 1, 1);
        assert!(matches!(generate_subject(&p, &t), Err(Error::InvalidProfile(_))));
        p.frames = 10;
        p.noise = -1.0;
        assert!(matches!(generate_subject(&p, &t), Err(Error::InvalidProfile(_))));
    }

    #[test]
    fn default_cohort_shape_and_guarantees() {
        let t = topo();
        let spec = CohortSpec::default();
        let cohort = generate_cohort(&spec, &t).unwrap();
        assert_eq!(cohort.subjects.len(), 12);
        let abnormal = cohort
            .subjects
            .iter()
            .filter(|s| s.annotation.label == FmLabel::FmMinus)
            .count();
        assert_eq!(abnormal, 4);
        let problems = check_cohort(&cohort, &SegmentationScheme::default(), &HistogramConfig::default()).unwrap();
        assert!(problems.is_empty(), "{problems:#?}");
        assert_eq!(cohort.fingerprint(), generate_cohort(&spec, &t).unwrap().fingerprint());
    }

    #[test]
    fn minimal_cohort() {
        let spec = CohortSpec {
            n_normal: 1,
            n_abnormal: 1,
            frames: 100,
            ..Default::default()
        };
        let cohort = generate_cohort(&spec, &topo()).unwrap();
        assert_eq!(cohort.subjects.len(), 2);
        let bad = CohortSpec {
            n_normal: 1,
            n_abnormal: 0,
            ..spec
        };
        assert!(generate_cohort(&bad, &topo()).is_err());
    }
}
