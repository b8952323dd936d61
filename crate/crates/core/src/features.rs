//! Orientation (HOJO2D) and displacement (HOJD2D) direction histograms, computed
//! per body part over fixed-length temporal windows and concatenated.

use std::f64::consts::TAU;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::{BodyPart, Bone, FmLabel, PoseSequence, SkeletonTopology, VideoAnnotation};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HistogramConfig {
    /// Number of direction bins. Bin `k` covers `[k·2π/bins, (k+1)·2π/bins)`,
    /// measured counter-clockwise from angle 0.
    pub bins: usize,
    /// Joint displacements shorter than this are ignored.
    pub displacement_epsilon: f64,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        HistogramConfig {
            bins: 8,
            displacement_epsilon: 1e-6,
        }
    }
}

impl HistogramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::InvalidConfig(format!("bins must be >= 2, got {}", self.bins)));
        }
        if self.displacement_epsilon.is_nan() || self.displacement_epsilon <= 0.0 {
            return Err(Error::InvalidConfig("displacement_epsilon must be > 0".into()));
        }
        Ok(())
    }

    /// Bin index for the direction of `(dx, dy)`.
    pub fn bin_of(&self, dx: f64, dy: f64) -> usize {
        let mut theta = dy.atan2(dx);
        if theta < 0.0 {
            theta += TAU;
        }
        if theta >= TAU {
            return 0;
        }
        let k = (theta / (TAU / self.bins as f64)) as usize;
        k.min(self.bins - 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationScheme {
    pub window_len: usize,
}

impl Default for SegmentationScheme {
    fn default() -> Self {
        SegmentationScheme { window_len: 100 }
    }
}

impl SegmentationScheme {
    pub fn validate(&self) -> Result<()> {
        if self.window_len < 2 {
            return Err(Error::InvalidConfig(format!(
                "window_len must be >= 2, got {}",
                self.window_len
            )));
        }
        Ok(())
    }
}

/// Fused HOJO2D ‖ HOJD2D vector for one (body part, temporal segment).
#[derive(Clone, Debug, PartialEq)]
pub struct FusedFeature {
    pub subject_id: String,
    pub part: BodyPart,
    pub segment_index: usize,
    pub vector: Vec<f64>,
    pub label: FmLabel,
}

/// Length of the fused vector of `part`.
pub fn feature_dim(topology: &SkeletonTopology, part: BodyPart, cfg: &HistogramConfig) -> usize {
    let m = topology.members(part);
    cfg.bins * (m.bones.len() + m.joints.len())
}

/// Consecutive non-overlapping windows; the trailing partial window is dropped.
pub fn segment_windows(n_frames: usize, scheme: &SegmentationScheme) -> Result<Vec<Range<usize>>> {
    let w = scheme.window_len;
    if n_frames < w {
        return Err(Error::TooShort {
            frames: n_frames,
            window: w,
        });
    }
    Ok((0..n_frames / w).map(|k| k * w..(k + 1) * w).collect())
}

fn check_window(seq: &PoseSequence, window: &Range<usize>, min_len: usize) -> Result<()> {
    if window.end > seq.n_frames() || window.len() < min_len {
        return Err(Error::InvalidConfig(format!(
            "window {window:?} is not valid for a {}-frame sequence",
            seq.n_frames()
        )));
    }
    Ok(())
}

/// Turns bin counts into a distribution; an empty histogram becomes uniform.
fn normalized(counts: Vec<u32>) -> Vec<f64> {
    let total: u32 = counts.iter().sum();
    if total == 0 {
        let n = counts.len();
        return vec![1.0 / n as f64; n];
    }
    counts.into_iter().map(|c| c as f64 / total as f64).collect()
}

/// Orientation histogram of each bone over `window`.
pub fn orientation_histograms(
    seq: &PoseSequence,
    window: Range<usize>,
    bones: &[Bone],
    cfg: &HistogramConfig,
) -> Result<Vec<Vec<f64>>> {
    check_window(seq, &window, 1)?;
    Ok(bones
        .iter()
        .map(|&Bone(p, d)| {
            let mut counts = vec![0u32; cfg.bins];
            for t in window.clone() {
                let (a, b) = (seq.joint(t, p), seq.joint(t, d));
                let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                if dx == 0.0 && dy == 0.0 {
                    continue;
                }
                counts[cfg.bin_of(dx, dy)] += 1;
            }
            normalized(counts)
        })
        .collect())
}

/// Displacement-direction histogram of each joint over consecutive frame pairs in `window`.
pub fn displacement_histograms(
    seq: &PoseSequence,
    window: Range<usize>,
    joints: &[usize],
    cfg: &HistogramConfig,
) -> Result<Vec<Vec<f64>>> {
    check_window(seq, &window, 2)?;
    Ok(joints
        .iter()
        .map(|&j| {
            let mut counts = vec![0u32; cfg.bins];
            for t in window.start..window.end - 1 {
                let (a, b) = (seq.joint(t, j), seq.joint(t + 1, j));
                let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                if dx.hypot(dy) < cfg.displacement_epsilon {
                    continue;
                }
                counts[cfg.bin_of(dx, dy)] += 1;
            }
            normalized(counts)
        })
        .collect())
}

/// HOJO2D: per-bone orientation histograms of `part`.
pub fn hojo2d(
    seq: &PoseSequence,
    window: Range<usize>,
    part: BodyPart,
    cfg: &HistogramConfig,
) -> Result<Vec<Vec<f64>>> {
    let bones: Vec<Bone> = seq.topology().part_bones(part).collect();
    orientation_histograms(seq, window, &bones, cfg)
}

/// HOJD2D: per-joint displacement histograms of `part`.
pub fn hojd2d(
    seq: &PoseSequence,
    window: Range<usize>,
    part: BodyPart,
    cfg: &HistogramConfig,
) -> Result<Vec<Vec<f64>>> {
    let joints = seq.topology().members(part).joints.clone();
    displacement_histograms(seq, window, &joints, cfg)
}

/// Early fusion: bone histograms first, then joint histograms.
pub fn fuse(orientation: Vec<Vec<f64>>, displacement: Vec<Vec<f64>>) -> Vec<f64> {
    orientation.into_iter().chain(displacement).flatten().collect()
}

/// One fused feature per (window, part), window-major, each labelled with the
/// video's annotation. Expects a normalized sequence.
pub fn extract_features(
    seq: &PoseSequence,
    annotation: &VideoAnnotation,
    scheme: &SegmentationScheme,
    cfg: &HistogramConfig,
) -> Result<Vec<FusedFeature>> {
    cfg.validate()?;
    scheme.validate()?;
    if annotation.subject_id != seq.subject_id() {
        return Err(Error::MissingAnnotation(seq.subject_id().to_string()));
    }
    let windows = segment_windows(seq.n_frames(), scheme)?;
    let mut out = Vec::with_capacity(windows.len() * BodyPart::ALL.len());
    for (segment_index, window) in windows.into_iter().enumerate() {
        for part in BodyPart::ALL {
            let orientation = hojo2d(seq, window.clone(), part, cfg)?;
            let displacement = hojd2d(seq, window.clone(), part, cfg)?;
            out.push(FusedFeature {
                subject_id: seq.subject_id().to_string(),
                part,
                segment_index,
                vector: fuse(orientation, displacement),
                label: annotation.label,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;
    use std::sync::Arc;

    use super::*;
    use crate::skeleton::{default_topology, Point};

    fn topo() -> Arc<SkeletonTopology> {
        Arc::new(default_topology())
    }

    /// Sequence whose joint `j` follows `path(t)` and every other joint sits still.
    fn single_joint_path(n: usize, j: usize, path: impl Fn(usize) -> Point) -> PoseSequence {
        let base: Vec<Point> = (0..15).map(|k| [k as f64, (k * k) as f64 * 0.1]).collect();
        let frames = (0..n)
            .map(|t| {
                let mut f = base.clone();
                f[j] = path(t);
                f
            })
            .collect();
        PoseSequence::new("s", 30.0, frames, topo()).unwrap()
    }

    #[test]
    fn windows_floor_and_drop_tail() {
        let s = SegmentationScheme::default();
        assert_eq!(segment_windows(1000, &s).unwrap().len(), 10);
        assert_eq!(segment_windows(100, &s).unwrap(), vec![0..100]);
        assert_eq!(segment_windows(199, &s).unwrap(), vec![0..100]);
        assert!(matches!(
            segment_windows(99, &s),
            Err(Error::TooShort {
                frames: 99,
                window: 100
            })
        ));
    }

    #[test]
    fn bin_boundaries() {
        let cfg = HistogramConfig::default();
        assert_eq!(cfg.bin_of(1.0, 0.0), 0);
        assert_eq!(cfg.bin_of(0.0, 1.0), 2);
        assert_eq!(cfg.bin_of(-1.0, 0.0), 4);
        assert_eq!(cfg.bin_of(0.0, -1.0), 6);
        assert_eq!(cfg.bin_of(1.0, -1e-300), 0);
        assert_eq!(cfg.bin_of(1.0, -1e-3), 7);
        assert_eq!(cfg.bin_of(1.0, -0.0), 0);
    }

    #[test]
    fn bone_along_x_and_y() {
        let cfg = HistogramConfig::default();
        // left shoulder is joint 3, left elbow joint 4: bone (3, 4)
        let along_x = single_joint_path(10, 4, |_| [3.0 + 2.0, 0.9]);
        let h = orientation_histograms(&along_x, 0..10, &[Bone(3, 4)], &cfg).unwrap();
        assert_eq!(h[0], vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);

        let along_y = single_joint_path(10, 4, |_| [3.0, 0.9 + 1.5]);
        let h = orientation_histograms(&along_y, 0..10, &[Bone(3, 4)], &cfg).unwrap();
        let mut expected = vec![0.0; 8];
        expected[2] = 1.0;
        assert_eq!(h[0], expected);
    }

    #[test]
    fn bone_alternating_x_and_y() {
        let cfg = HistogramConfig::default();
        let seq = single_joint_path(100, 4, |t| if t % 2 == 0 { [4.0, 0.9] } else { [3.0, 1.9] });
        let h = orientation_histograms(&seq, 0..100, &[Bone(3, 4)], &cfg).unwrap();
        // brute force: count frames by direction
        let along_x = (0..100).filter(|t| t % 2 == 0).count() as f64 / 100.0;
        assert_eq!(h[0][0], along_x);
        assert_eq!(h[0][2], 1.0 - along_x);
        assert_eq!(h[0][0], 0.5);
    }

    #[test]
    fn zero_length_bone_is_uniform() {
        let cfg = HistogramConfig::default();
        let seq = single_joint_path(5, 4, |_| [3.0, 0.9]);
        let h = orientation_histograms(&seq, 0..5, &[Bone(3, 4)], &cfg).unwrap();
        assert_eq!(h[0], vec![0.125; 8]);
    }

    #[test]
    fn stationary_joint_is_uniform() {
        let cfg = HistogramConfig::default();
        let seq = single_joint_path(100, 5, |_| [1.0, 2.0]);
        let h = displacement_histograms(&seq, 0..100, &[5], &cfg).unwrap();
        assert_eq!(h[0], vec![0.125; 8]);
    }

    #[test]
    fn constant_motion_single_bin() {
        let cfg = HistogramConfig::default();
        let seq = single_joint_path(100, 5, |t| [t as f64, 0.0]);
        let h = displacement_histograms(&seq, 0..100, &[5], &cfg).unwrap();
        assert_eq!(h[0][0], 1.0);
    }

    #[test]
    fn oscillating_joint_splits_opposite_bins() {
        let cfg = HistogramConfig::default();
        let seq = single_joint_path(100, 5, |t| [(t % 2) as f64, 0.0]);
        let h = displacement_histograms(&seq, 0..100, &[5], &cfg).unwrap();
        // 99 pairs: even t steps +x, odd t steps -x
        let forward = (0..99).filter(|t| t % 2 == 0).count();
        assert_eq!(forward, 50);
        assert_eq!(h[0][0], 50.0 / 99.0);
        assert_eq!(h[0][4], 49.0 / 99.0);
    }

    #[test]
    fn sub_epsilon_moves_are_skipped() {
        let cfg = HistogramConfig::default();
        let seq = single_joint_path(10, 5, |t| {
            if t == 4 {
                [1.0, 1.0]
            } else {
                [1.0 + 1e-7 * t as f64, 0.0]
            }
        });
        let h = displacement_histograms(&seq, 0..10, &[5], &cfg).unwrap();
        // only the jump into and out of frame 4 survive
        assert_eq!(h[0][2], 0.5);
        assert_eq!(h[0][6], 0.5);
    }

    #[test]
    fn window_checks() {
        let cfg = HistogramConfig::default();
        let seq = single_joint_path(10, 5, |_| [0.0, 0.0]);
        assert!(displacement_histograms(&seq, 3..4, &[5], &cfg).is_err());
        assert!(orientation_histograms(&seq, 5..11, &[Bone(0, 1)], &cfg).is_err());
    }

    #[test]
    fn extract_counts_dims_and_labels() {
        let cfg = HistogramConfig::default();
        let scheme = SegmentationScheme::default();
        let seq = single_joint_path(1000, 5, |t| [(t as f64 * 0.37).sin(), (t as f64 * 0.11).cos()]);
        let ann = VideoAnnotation {
            subject_id: "s".into(),
            label: FmLabel::FmMinus,
        };
        let feats = extract_features(&seq, &ann, &scheme, &cfg).unwrap();
        assert_eq!(feats.len(), 50);
        assert!(feats.iter().all(|f| f.label == FmLabel::FmMinus));
        let la = feats.iter().find(|f| f.part == BodyPart::LeftArm).unwrap();
        assert_eq!(la.vector.len(), 40);
        let ht = feats.iter().find(|f| f.part == BodyPart::HeadTorso).unwrap();
        assert_eq!(ht.vector.len(), 8 * (4 + 3));
        for (i, f) in feats.iter().enumerate() {
            assert_eq!(f.segment_index, i / 5);
            assert_eq!(f.part, BodyPart::ALL[i % 5]);
        }
        assert_eq!(feats, extract_features(&seq, &ann, &scheme, &cfg).unwrap());
    }

    #[test]
    fn extract_rejects_short_video() {
        let seq = single_joint_path(99, 5, |_| [0.0, 0.0]);
        let ann = VideoAnnotation {
            subject_id: "s".into(),
            label: FmLabel::FmPlus,
        };
        let err = extract_features(&seq, &ann, &SegmentationScheme::default(), &HistogramConfig::default());
        assert!(matches!(err, Err(Error::TooShort { .. })));
    }

    #[test]
    fn quarter_turn_shifts_two_bins() {
        let cfg = HistogramConfig::default();
        let seq = single_joint_path(20, 4, |t| [3.0 + (t as f64 * 0.7).cos(), 0.9 + (t as f64 * 0.7).sin()]);
        let rot = seq.map_points(|[x, y]| {
            let (s, c) = FRAC_PI_2.sin_cos();
            [c * x - s * y, s * x + c * y]
        });
        let a = orientation_histograms(&seq, 0..20, &[Bone(3, 4)], &cfg).unwrap();
        let b = orientation_histograms(&rot, 0..20, &[Bone(3, 4)], &cfg).unwrap();
        for k in 0..8 {
            assert_eq!(a[0][k], b[0][(k + 2) % 8]);
        }
    }
}
