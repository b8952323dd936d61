//! Geometric part masks: each bone dilated into a capsule.

use serde::{Deserialize, Serialize};

use crate::skeleton::{BodyPart, Bone, Point, SkeletonTopology};
use crate::viz::{BinaryMask, PartMask};

/// Capsule radii as fractions of the frame diagonal, times `scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadiusConfig {
    pub limb: f64,
    pub torso: f64,
    pub head: f64,
    pub scale: f64,
}

impl Default for RadiusConfig {
    fn default() -> Self {
        RadiusConfig {
            limb: 0.06,
            torso: 0.14,
            head: 0.10,
            scale: 1.0,
        }
    }
}

impl RadiusConfig {
    fn factor(&self, part: BodyPart, bone: Bone, topology: &SkeletonTopology) -> f64 {
        if part.is_limb() {
            return self.limb;
        }
        let touches_head = [bone.0, bone.1].iter().any(|&j| topology.joints()[j] == "head");
        if touches_head {
            self.head
        } else {
            self.torso
        }
    }

    fn pixels(&self, factor: f64, width: u32, height: u32) -> f64 {
        factor * (width as f64).hypot(height as f64) * self.scale
    }
}

/// Euclidean distance from `p` to the segment `a`–`b`.
pub(crate) fn distance_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    (p[0] - (a[0] + t * dx)).hypot(p[1] - (a[1] + t * dy))
}

/// Sets every pixel whose centre lies within `r` of the segment.
pub(crate) fn draw_capsule(mask: &mut BinaryMask, a: Point, b: Point, r: f64) {
    let (w, h) = mask.dims();
    let lo = |v: f64| (v - r - 1.0).floor().max(0.0) as u32;
    let hi = |v: f64, lim: u32| ((v + r + 1.0).ceil().max(0.0) as u32).min(lim);
    let (x0, x1) = (lo(a[0].min(b[0])), hi(a[0].max(b[0]), w));
    let (y0, y1) = (lo(a[1].min(b[1])), hi(a[1].max(b[1]), h));
    for y in y0..y1 {
        for x in x0..x1 {
            let p = [x as f64 + 0.5, y as f64 + 0.5];
            if distance_to_segment(p, a, b) <= r {
                mask.set(x, y, true);
            }
        }
    }
}

/// Union of the capsules of one part, before any precedence is applied.
/// A part without bones gets a disc around each of its joints.
pub fn part_capsule_mask(
    pose: &[Point],
    topology: &SkeletonTopology,
    part: BodyPart,
    radius: &RadiusConfig,
    width: u32,
    height: u32,
) -> BinaryMask {
    let mut mask = BinaryMask::empty(width, height);
    let members = topology.members(part);
    if members.bones.is_empty() {
        let base = if part.is_limb() { radius.limb } else { radius.torso };
        let r = radius.pixels(base, width, height);
        for &j in &members.joints {
            draw_capsule(&mut mask, pose[j], pose[j], r);
        }
    }
    for bone in topology.part_bones(part) {
        let r = radius.pixels(radius.factor(part, bone, topology), width, height);
        draw_capsule(&mut mask, pose[bone.0], pose[bone.1], r);
    }
    mask
}

/// Disjoint part masks for one frame. Overlaps go to the first claimant in
/// the order LeftArm, RightArm, LeftLeg, RightLeg, HeadTorso.
pub fn capsule_masks(
    pose: &[Point],
    topology: &SkeletonTopology,
    radius: &RadiusConfig,
    width: u32,
    height: u32,
) -> Vec<PartMask> {
    let mut claimed = BinaryMask::empty(width, height);
    BodyPart::ALL
        .into_iter()
        .map(|part| {
            let mut mask = part_capsule_mask(pose, topology, part, radius, width, height);
            mask.subtract(&claimed);
            claimed.union_with(&mask);
            PartMask { part, mask }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn capsule_area_matches_analytic() {
        for (len, r) in [(60.0, 8.0), (100.0, 15.0), (40.0, 12.5)] {
            let mut m = BinaryMask::empty(300, 200);
            draw_capsule(&mut m, [100.0, 100.0], [100.0 + len, 100.0], r);
            let expected = 2.0 * r * len + PI * r * r;
            let got = m.count() as f64;
            assert!(
                (got - expected).abs() / expected < 0.05,
                "len {len} r {r}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn zero_length_bone_is_a_disc() {
        let mut m = BinaryMask::empty(100, 100);
        draw_capsule(&mut m, [50.0, 50.0], [50.0, 50.0], 10.0);
        let expected = PI * 100.0;
        assert!((m.count() as f64 - expected).abs() / expected < 0.05);
        assert!(m
            .pixels()
            .all(|(x, y)| ((x as f64 + 0.5 - 50.0).hypot(y as f64 + 0.5 - 50.0)) <= 10.0));
    }

    #[test]
    fn midline_pixel_is_inside() {
        let mut m = BinaryMask::empty(100, 100);
        draw_capsule(&mut m, [10.5, 40.5], [80.5, 40.5], 3.0);
        for x in 10..=80 {
            assert!(m.get(x, 40));
        }
        assert!(!m.get(50, 45));
    }

    #[test]
    fn clipped_at_frame_border() {
        let mut m = BinaryMask::empty(20, 20);
        draw_capsule(&mut m, [-5.0, 10.0], [30.0, 10.0], 4.0);
        assert!(m.get(0, 10) && m.get(19, 10));
    }
}
