//! Left/right split of a limb segmentation mask with seeded 2-means.

use crate::error::{Error, Result};
use crate::skeleton::{BodyPart, Point, SkeletonTopology};
use crate::viz::{BinaryMask, PartMask, RawSegmentMask};

/// Lloyd iterations stop once no centroid moves this far (pixels).
pub const KMEANS_TOLERANCE: f64 = 0.5;
pub const KMEANS_MAX_ITER: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct TwoMeans {
    /// Cluster (0 or 1) of each point.
    pub assignment: Vec<u8>,
    pub centroids: [Point; 2],
    pub iterations: usize,
}

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Nearer centroid; equidistant points go to cluster 0.
fn nearest(p: Point, c: &[Point; 2]) -> u8 {
    u8::from(dist2(p, c[1]) < dist2(p, c[0]))
}

/// Lloyd's algorithm with k = 2 from the given seeds. The returned assignment
/// is the nearest-centroid assignment for the returned centroids. A cluster
/// that loses all its points keeps its previous centroid.
pub fn lloyd_two_means(points: &[Point], seeds: [Point; 2]) -> TwoMeans {
    let mut centroids = seeds;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut sum = [[0.0; 2]; 2];
        let mut n = [0usize; 2];
        for &p in points {
            let c = nearest(p, &centroids) as usize;
            sum[c][0] += p[0];
            sum[c][1] += p[1];
            n[c] += 1;
        }
        let mut moved: f64 = 0.0;
        for c in 0..2 {
            if n[c] > 0 {
                let next = [sum[c][0] / n[c] as f64, sum[c][1] / n[c] as f64];
                moved = moved.max(dist2(next, centroids[c]).sqrt());
                centroids[c] = next;
            }
        }
        if moved < KMEANS_TOLERANCE || iterations >= KMEANS_MAX_ITER {
            break;
        }
    }
    TwoMeans {
        assignment: points.iter().map(|&p| nearest(p, &centroids)).collect(),
        centroids,
        iterations,
    }
}

/// Splits `points` into left (`true`) and right. Clusters are matched to the
/// side anchors by the cheaper of the two pairings; if every point falls in
/// one cluster, all go to the side nearer that cluster's centroid.
pub fn split_points(points: &[Point], seeds: [Point; 2], anchors: [Point; 2]) -> Vec<bool> {
    let km = lloyd_two_means(points, seeds);
    let n1 = km.assignment.iter().filter(|&&a| a == 1).count();
    let [left, right] = anchors;
    if n1 == 0 || n1 == points.len() {
        let c = km.centroids[usize::from(n1 > 0)];
        return vec![dist2(c, left) <= dist2(c, right); points.len()];
    }
    let [c0, c1] = km.centroids;
    let straight = dist2(c0, left).sqrt() + dist2(c1, right).sqrt();
    let swapped = dist2(c0, right).sqrt() + dist2(c1, left).sqrt();
    let cluster0_left = straight <= swapped;
    km.assignment.iter().map(|&a| (a == 0) == cluster0_left).collect()
}

fn mean(points: impl Iterator<Item = Point>) -> Option<Point> {
    let (mut s, mut n) = ([0.0; 2], 0usize);
    for p in points {
        s[0] += p[0];
        s[1] += p[1];
        n += 1;
    }
    (n > 0).then(|| [s[0] / n as f64, s[1] / n as f64])
}

/// Splits a limb-class mask into left and right part masks that partition it.
///
/// Seeds are the midpoints of the segment's bounding joints on each side (for
/// example left shoulder/elbow for upper arms); side anchors are the mean joint
/// positions of the left and right limb parts.
pub fn split_mask_lr(
    mask: &RawSegmentMask,
    frame_pose: &[Point],
    topology: &SkeletonTopology,
) -> Result<(PartMask, PartMask)> {
    let (left_part, right_part) = mask
        .class
        .limb_sides()
        .ok_or_else(|| Error::InvalidConfig(format!("{:?} is not a limb class", mask.class)))?;
    if mask.mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    if frame_pose.len() != topology.n_joints() {
        return Err(Error::DimensionMismatch {
            expected: topology.n_joints(),
            got: frame_pose.len(),
        });
    }
    let anchor = |part: BodyPart| {
        mean(topology.members(part).joints.iter().map(|&j| frame_pose[j]))
            .ok_or_else(|| Error::InvalidTopology(format!("{part} has no joints")))
    };
    let anchors = [anchor(left_part)?, anchor(right_part)?];
    let seed = |side: &str, fallback: Point| {
        mask.class
            .side_joints(side)
            .and_then(|names| {
                let a = topology.joint_index(&names[0])?;
                let b = topology.joint_index(&names[1])?;
                mean([frame_pose[a], frame_pose[b]].into_iter())
            })
            .unwrap_or(fallback)
    };
    let seeds = [seed("left", anchors[0]), seed("right", anchors[1])];

    let coords: Vec<(u32, u32)> = mask.mask.pixels().collect();
    let points: Vec<Point> = coords.iter().map(|&(x, y)| [x as f64 + 0.5, y as f64 + 0.5]).collect();
    let is_left = split_points(&points, seeds, anchors);

    let (w, h) = mask.mask.dims();
    let mut left = BinaryMask::empty(w, h);
    let mut right = BinaryMask::empty(w, h);
    for (&(x, y), l) in coords.iter().zip(is_left) {
        if l {
            left.set(x, y, true);
        } else {
            right.set(x, y, true);
        }
    }
    Ok((
        PartMask {
            part: left_part,
            mask: left,
        },
        PartMask {
            part: right_part,
            mask: right,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::default_topology;
    use crate::viz::SegmentClass;

    fn pose_with_wrists(left_x: f64, right_x: f64) -> Vec<Point> {
        let t = default_topology();
        let mut pose = vec![[100.0, 50.0]; t.n_joints()];
        for side in ["left", "right"] {
            let x = if side == "left" { left_x } else { right_x };
            for j in ["shoulder", "elbow", "wrist"] {
                pose[t.joint_index(&format!("{side}_{j}")).unwrap()] = [x, 60.0];
            }
        }
        pose
    }

    fn blob(mask: &mut BinaryMask, cx: u32, cy: u32, r: u32) {
        for y in cy - r..=cy + r {
            for x in cx - r..=cx + r {
                mask.set(x, y, true);
            }
        }
    }

    #[test]
    fn separable_blobs_follow_wrists() {
        let mut m = BinaryMask::empty(200, 120);
        blob(&mut m, 30, 60, 6);
        blob(&mut m, 170, 60, 6);
        let raw = RawSegmentMask {
            class: SegmentClass::LowerArms,
            mask: m.clone(),
        };
        let (l, r) = split_mask_lr(&raw, &pose_with_wrists(30.0, 170.0), &default_topology()).unwrap();
        assert_eq!(l.part, BodyPart::LeftArm);
        assert!(l.mask.pixels().all(|(x, _)| x < 100));
        assert!(r.mask.pixels().all(|(x, _)| x > 100));
        assert_eq!(l.mask.count() + r.mask.count(), m.count());

        // mirrored skeleton swaps the sides
        let (l, _) = split_mask_lr(&raw, &pose_with_wrists(170.0, 30.0), &default_topology()).unwrap();
        assert!(l.mask.pixels().all(|(x, _)| x > 100));
    }

    #[test]
    fn single_pixel_goes_to_nearer_side() {
        let mut m = BinaryMask::empty(200, 120);
        m.set(160, 60, true);
        let raw = RawSegmentMask {
            class: SegmentClass::UpperArms,
            mask: m,
        };
        let (l, r) = split_mask_lr(&raw, &pose_with_wrists(30.0, 170.0), &default_topology()).unwrap();
        assert_eq!((l.mask.count(), r.mask.count()), (0, 1));
    }

    #[test]
    fn rejects_empty_and_non_limb() {
        let pose = pose_with_wrists(30.0, 170.0);
        let empty = RawSegmentMask {
            class: SegmentClass::LowerLegs,
            mask: BinaryMask::empty(10, 10),
        };
        assert!(matches!(
            split_mask_lr(&empty, &pose, &default_topology()),
            Err(Error::EmptyMask)
        ));
        let mut m = BinaryMask::empty(10, 10);
        m.set(1, 1, true);
        let head = RawSegmentMask {
            class: SegmentClass::Head,
            mask: m,
        };
        assert!(split_mask_lr(&head, &pose, &default_topology()).is_err());
    }

    #[test]
    fn lloyd_stops_within_tolerance() {
        let pts: Vec<Point> = (0..50).map(|i| [(i % 10) as f64, (i / 10) as f64 * 40.0]).collect();
        let km = lloyd_two_means(&pts, [[0.0, 0.0], [0.0, 160.0]]);
        assert!(km.iterations <= KMEANS_MAX_ITER);
        for (p, &a) in pts.iter().zip(&km.assignment) {
            assert_eq!(a, nearest(*p, &km.centroids));
        }
    }
}
