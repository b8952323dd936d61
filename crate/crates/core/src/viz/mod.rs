//! Overlay rendering: body parts predicted FM- are tinted red.
//!
//! Part masks come either from an external six-class body segmentation (arm and
//! leg classes are split into left/right with 2-means) or from capsules drawn
//! around the skeleton's bones.

mod capsule;
mod kmeans;
mod overlay;
mod sequence;

use image::GrayImage;
use serde::{Deserialize, Serialize};

pub use capsule::{capsule_masks, part_capsule_mask, RadiusConfig};
pub use kmeans::{lloyd_two_means, split_mask_lr, split_points, TwoMeans, KMEANS_MAX_ITER, KMEANS_TOLERANCE};
pub use overlay::{blend_channel, render_overlay, OverlaySpec, PartFlags};
pub use sequence::{
    flags_for_frame, load_part_masks, render_sequence, segment_flags, FrameSource, MaskSource, RenderReport,
};

use crate::skeleton::BodyPart;

/// Row-major binary mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn empty(width: u32, height: u32) -> Self {
        BinaryMask {
            width,
            height,
            bits: vec![false; (width * height) as usize],
        }
    }

    /// Pixels brighter than mid-grey are set.
    pub fn from_luma(img: &GrayImage) -> Self {
        BinaryMask {
            width: img.width(),
            height: img.height(),
            bits: img.pixels().map(|p| p.0[0] > 127).collect(),
        }
    }

    pub fn to_luma(&self) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |x, y| {
            image::Luma([if self.get(x, y) { 255 } else { 0 }])
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, on: bool) {
        self.bits[(y * self.width + x) as usize] = on;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Coordinates of set pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| (i as u32 % self.width, i as u32 / self.width))
    }

    pub fn union_with(&mut self, other: &BinaryMask) {
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    pub fn subtract(&mut self, other: &BinaryMask) {
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a &= !b;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartMask {
    pub part: BodyPart,
    pub mask: BinaryMask,
}

/// Classes produced by the external six-part body segmentation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentClass {
    Head,
    Torso,
    UpperArms,
    LowerArms,
    PelvisUpperLegs,
    LowerLegs,
}

impl SegmentClass {
    pub const ALL: [SegmentClass; 6] = [
        SegmentClass::Head,
        SegmentClass::Torso,
        SegmentClass::UpperArms,
        SegmentClass::LowerArms,
        SegmentClass::PelvisUpperLegs,
        SegmentClass::LowerLegs,
    ];

    pub fn file_stem(self) -> &'static str {
        match self {
            SegmentClass::Head => "head",
            SegmentClass::Torso => "torso",
            SegmentClass::UpperArms => "upper_arms",
            SegmentClass::LowerArms => "lower_arms",
            SegmentClass::PelvisUpperLegs => "pelvis_upper_legs",
            SegmentClass::LowerLegs => "lower_legs",
        }
    }

    /// Left and right parts for limb classes.
    pub fn limb_sides(self) -> Option<(BodyPart, BodyPart)> {
        match self {
            SegmentClass::UpperArms | SegmentClass::LowerArms => Some((BodyPart::LeftArm, BodyPart::RightArm)),
            SegmentClass::PelvisUpperLegs | SegmentClass::LowerLegs => Some((BodyPart::LeftLeg, BodyPart::RightLeg)),
            SegmentClass::Head | SegmentClass::Torso => None,
        }
    }

    /// Joint names bounding the limb segment on one side.
    pub(crate) fn side_joints(self, side: &str) -> Option<[String; 2]> {
        let (a, b) = match self {
            SegmentClass::UpperArms => ("shoulder", "elbow"),
            SegmentClass::LowerArms => ("elbow", "wrist"),
            SegmentClass::PelvisUpperLegs => ("hip", "knee"),
            SegmentClass::LowerLegs => ("knee", "ankle"),
            _ => return None,
        };
        Some([format!("{side}_{a}"), format!("{side}_{b}")])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawSegmentMask {
    pub class: SegmentClass,
    pub mask: BinaryMask,
}
