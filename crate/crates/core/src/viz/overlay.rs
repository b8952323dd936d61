use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::viz::{BinaryMask, PartMask};

/// FM- flag of each part, indexed by [`BodyPart::index`](crate::skeleton::BodyPart::index).
pub type PartFlags = [bool; 5];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OverlaySpec {
    pub tint: [u8; 3],
    pub alpha: f64,
}

impl Default for OverlaySpec {
    fn default() -> Self {
        OverlaySpec {
            tint: [255, 0, 0],
            alpha: 0.45,
        }
    }
}

impl OverlaySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// `(1 - alpha)·src + alpha·tint`, rounded half up.
pub fn blend_channel(src: u8, tint: u8, alpha: f64) -> u8 {
    let v = (1.0 - alpha) * src as f64 + alpha * tint as f64;
    // the epsilon keeps exact .5 results from rounding down after float error
    (v + 0.5 + 1e-9).floor().clamp(0.0, 255.0) as u8
}

/// Tints the pixels of flagged parts; every other pixel is copied unchanged.
pub fn render_overlay(frame: &RgbImage, masks: &[PartMask], flags: &PartFlags, spec: &OverlaySpec) -> Result<RgbImage> {
    spec.validate()?;
    let (w, h) = frame.dimensions();
    let mut tinted = BinaryMask::empty(w, h);
    for m in masks {
        if m.mask.dims() != (w, h) {
            return Err(Error::DimensionMismatch {
                expected: (w * h) as usize,
                got: (m.mask.width() * m.mask.height()) as usize,
            });
        }
        if flags[m.part.index()] {
            tinted.union_with(&m.mask);
        }
    }
    let mut out = frame.clone();
    for (x, y) in tinted.pixels() {
        let px = out.get_pixel_mut(x, y);
        for c in 0..3 {
            px.0[c] = blend_channel(px.0[c], spec.tint[c], spec.alpha);
        }
    }
    Ok(out)
}
