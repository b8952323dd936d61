//! Rendering a whole video: per-segment flags are routed onto frames and each
//! frame is written as `{frame:06}.png`.

use std::fs;
use std::path::{Path, PathBuf};

use image::{ColorType, ImageReader, Rgb, RgbImage};
use rayon::prelude::*;
use serde::Serialize;

use crate::classify::SegmentPrediction;
use crate::error::{Error, Result};
use crate::features::SegmentationScheme;
use crate::skeleton::{BodyPart, FmLabel, Point, PoseSequence, SkeletonTopology};
use crate::viz::{
    capsule_masks, render_overlay, split_mask_lr, BinaryMask, OverlaySpec, PartFlags, PartMask, RadiusConfig,
    RawSegmentMask, SegmentClass,
};

#[derive(Clone, Debug, PartialEq)]
pub enum FrameSource {
    /// Directory of PNG frames, taken in file-name order.
    Dir(PathBuf),
    /// Plain canvas, one frame per pose.
    Blank { width: u32, height: u32, color: [u8; 3] },
}

#[derive(Clone, Debug, PartialEq)]
pub enum MaskSource {
    /// Directory of `{frame:06}_{class}.png` segmentation masks.
    Dir(PathBuf),
    Capsules(RadiusConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameFlags {
    pub frame: usize,
    pub segment: usize,
    pub fm_minus: Vec<BodyPart>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RenderReport {
    pub window_len: usize,
    pub frames: Vec<FrameFlags>,
}

/// FM- flags per segment for one subject. Segments without a prediction are unflagged.
pub fn segment_flags(preds: &[SegmentPrediction], subject: &str) -> Vec<PartFlags> {
    let mine: Vec<&SegmentPrediction> = preds.iter().filter(|p| p.subject_id == subject).collect();
    let n = mine.iter().map(|p| p.segment_index + 1).max().unwrap_or(0);
    let mut flags = vec![[false; 5]; n];
    for p in mine {
        flags[p.segment_index][p.part.index()] = p.predicted == FmLabel::FmMinus;
    }
    flags
}

/// Segment of frame `t`; frames past the last segment reuse it.
fn segment_of(t: usize, window_len: usize, n_segments: usize) -> usize {
    (t / window_len).min(n_segments.saturating_sub(1))
}

pub fn flags_for_frame(t: usize, window_len: usize, seg_flags: &[PartFlags]) -> PartFlags {
    if seg_flags.is_empty() {
        return [false; 5];
    }
    seg_flags[segment_of(t, window_len, seg_flags.len())]
}

fn read_png(path: &Path) -> Result<image::DynamicImage> {
    ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    Ok(files)
}

/// Part masks for frame `t` from six-class segmentation files. Missing class
/// files count as empty; limb classes are split into left and right.
pub fn load_part_masks(
    dir: &Path,
    t: usize,
    pose: &[Point],
    topology: &SkeletonTopology,
    width: u32,
    height: u32,
) -> Result<Vec<PartMask>> {
    let mut parts: Vec<BinaryMask> = (0..5).map(|_| BinaryMask::empty(width, height)).collect();
    for class in SegmentClass::ALL {
        let path = dir.join(format!("{t:06}_{}.png", class.file_stem()));
        if !path.exists() {
            continue;
        }
        let mask = BinaryMask::from_luma(&read_png(&path)?.to_luma8());
        if mask.dims() != (width, height) {
            return Err(Error::DimensionMismatch {
                expected: (width * height) as usize,
                got: (mask.width() * mask.height()) as usize,
            });
        }
        if mask.is_empty() {
            continue;
        }
        match class.limb_sides() {
            None => parts[BodyPart::HeadTorso.index()].union_with(&mask),
            Some(_) => {
                let (l, r) = split_mask_lr(&RawSegmentMask { class, mask }, pose, topology)?;
                parts[l.part.index()].union_with(&l.mask);
                parts[r.part.index()].union_with(&r.mask);
            }
        }
    }
    // limbs take precedence over head/torso
    let limbs = BodyPart::ALL
        .iter()
        .filter(|p| p.is_limb())
        .fold(BinaryMask::empty(width, height), |mut acc, p| {
            acc.union_with(&parts[p.index()]);
            acc
        });
    parts[BodyPart::HeadTorso.index()].subtract(&limbs);
    Ok(BodyPart::ALL
        .into_iter()
        .zip(parts)
        .map(|(part, mask)| PartMask { part, mask })
        .collect())
}

/// Renders one overlay PNG per input frame into `out_dir`, plus `flags.json`.
///
/// Frame `t` uses the flags of segment `t / window_len`; frames after the
/// last segment reuse its flags. Frames with no flagged part are written
/// pixel-identical to the input (byte-identical when the input is 8-bit RGB).
pub fn render_sequence(
    frames: &FrameSource,
    pose: &PoseSequence,
    masks: &MaskSource,
    preds: &[SegmentPrediction],
    scheme: &SegmentationScheme,
    spec: &OverlaySpec,
    out_dir: &Path,
) -> Result<RenderReport> {
    spec.validate()?;
    scheme.validate()?;
    let files = match frames {
        FrameSource::Dir(dir) => Some(list_pngs(dir)?),
        FrameSource::Blank { .. } => None,
    };
    let n_frames = files.as_ref().map_or(pose.n_frames(), Vec::len);
    let seg_flags = segment_flags(preds, pose.subject_id());
    let span = seg_flags.len() * scheme.window_len;
    if n_frames < span {
        return Err(Error::InvalidSequence(format!(
            "{n_frames} frames do not cover {} predicted segments",
            seg_flags.len()
        )));
    }
    if pose.n_frames() < n_frames {
        return Err(Error::InvalidSequence(format!(
            "{} poses for {n_frames} frames",
            pose.n_frames()
        )));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let topology = pose.topology();
    (0..n_frames).into_par_iter().try_for_each(|t| -> Result<()> {
        let flags = flags_for_frame(t, scheme.window_len, &seg_flags);
        let out_path = out_dir.join(format!("{t:06}.png"));
        let frame = match (&files, frames) {
            (Some(files), _) => {
                let img = read_png(&files[t])?;
                if !flags.iter().any(|&f| f) && img.color() == ColorType::Rgb8 {
                    fs::copy(&files[t], &out_path).map_err(|e| Error::io(&out_path, e))?;
                    return Ok(());
                }
                img.to_rgb8()
            }
            (None, FrameSource::Blank { width, height, color }) => RgbImage::from_pixel(*width, *height, Rgb(*color)),
            (None, FrameSource::Dir(_)) => unreachable!(),
        };
        let (w, h) = frame.dimensions();
        let part_masks = if flags.iter().any(|&f| f) {
            match masks {
                MaskSource::Capsules(radius) => capsule_masks(pose.frame(t), topology, radius, w, h),
                MaskSource::Dir(dir) => load_part_masks(dir, t, pose.frame(t), topology, w, h)?,
            }
        } else {
            Vec::new()
        };
        let out = render_overlay(&frame, &part_masks, &flags, spec)?;
        out.save(&out_path).map_err(|source| Error::Image {
            path: out_path.clone(),
            source,
        })
    })?;

    let report = RenderReport {
        window_len: scheme.window_len,
        frames: (0..n_frames)
            .map(|t| {
                let flags = flags_for_frame(t, scheme.window_len, &seg_flags);
                FrameFlags {
                    frame: t,
                    segment: segment_of(t, scheme.window_len, seg_flags.len()),
                    fm_minus: BodyPart::ALL.into_iter().filter(|p| flags[p.index()]).collect(),
                }
            })
            .collect(),
    };
    let json = serde_json::to_vec_pretty(&report).expect("report serializes");
    let path = out_dir.join("flags.json");
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(report)
}
