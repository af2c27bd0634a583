//! Anchor lattice with a single anchor scale per pyramid level.
//!
//! A level with downsampling factor `S` carries anchors of scale `8S` centered
//! on the cell centers `((j + 0.5) S, (i + 0.5) S)`. Each aspect ratio `r = h/w`
//! yields a box of width `8S / sqrt(r)` and height `8S * sqrt(r)`, so every anchor
//! on a level has area `(8S)^2`. Anchors are not clipped to the image.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::BBox;

/// Strides of the five pyramid levels; `8S` spans 32 to 512 px.
pub const DEFAULT_STRIDES: [u32; 5] = [4, 8, 16, 32, 64];
/// Anchor scale relative to the stride.
pub const SCALE_PER_STRIDE: f64 = 8.0;
/// Tall pedestrian ratio used for CityPersons / Caltech style data.
pub const PEDESTRIAN_RATIOS: [f64; 1] = [2.44];
/// Ratios for free-pose person data (CrowdHuman style).
pub const GENERAL_RATIOS: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnchorLevel {
    pub stride: u32,
    pub scale: f64,
    pub grid_w: usize,
    pub grid_h: usize,
}

impl AnchorLevel {
    fn new(stride: u32, image_w: u32, image_h: u32) -> Self {
        Self {
            stride,
            scale: SCALE_PER_STRIDE * f64::from(stride),
            grid_w: image_w.div_ceil(stride) as usize,
            grid_h: image_h.div_ceil(stride) as usize,
        }
    }

    pub fn cells(&self) -> usize {
        self.grid_w * self.grid_h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorGrid {
    levels: Vec<AnchorLevel>,
    aspect_ratios: Vec<f64>,
    anchors: Vec<Vec<BBox>>,
}

impl AnchorGrid {
    pub fn levels(&self) -> &[AnchorLevel] {
        &self.levels
    }

    pub fn aspect_ratios(&self) -> &[f64] {
        &self.aspect_ratios
    }

    /// Anchors of one level, ordered row, then column, then ratio.
    pub fn level_anchors(&self, level: usize) -> &[BBox] {
        &self.anchors[level]
    }

    pub fn anchor(&self, level: usize, row: usize, col: usize, ratio: usize) -> BBox {
        let l = &self.levels[level];
        self.anchors[level][(row * l.grid_w + col) * self.aspect_ratios.len() + ratio]
    }

    pub fn len(&self) -> usize {
        self.anchors.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &BBox> {
        self.anchors.iter().flatten()
    }

    /// Every anchor in level order.
    pub fn to_vec(&self) -> Vec<BBox> {
        self.iter().copied().collect()
    }
}

/// Width and height of an anchor with the given scale and `h/w` ratio.
pub fn anchor_shape(scale: f64, ratio: f64) -> (f64, f64) {
    let root = libm::sqrt(ratio);
    (scale / root, scale * root)
}

pub fn generate_anchor_grid(
    image_w: u32,
    image_h: u32,
    strides: &[u32],
    aspect_ratios: &[f64],
) -> Result<AnchorGrid> {
    if strides.is_empty() {
        return Err(Error::Config("at least one stride is required"));
    }
    if aspect_ratios.is_empty() {
        return Err(Error::Config("at least one aspect ratio is required"));
    }
    if image_w == 0 || image_h == 0 {
        return Err(Error::Config("image dimensions must be positive"));
    }
    if strides[0] == 0 || strides.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "strides must be positive and strictly ascending",
        ));
    }
    if aspect_ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::Config("aspect ratios must be positive"));
    }

    let mut levels = Vec::with_capacity(strides.len());
    let mut anchors = Vec::with_capacity(strides.len());
    for &stride in strides {
        let level = AnchorLevel::new(stride, image_w, image_h);
        let shapes: Vec<(f64, f64)> = aspect_ratios
            .iter()
            .map(|&r| anchor_shape(level.scale, r))
            .collect();
        let s = f64::from(stride);
        let mut boxes = Vec::with_capacity(level.cells() * shapes.len());
        for i in 0..level.grid_h {
            let cy = (i as f64 + 0.5) * s;
            for j in 0..level.grid_w {
                let cx = (j as f64 + 0.5) * s;
                for &(w, h) in &shapes {
                    boxes.push(BBox::from_center(cx, cy, w, h)?);
                }
            }
        }
        levels.push(level);
        anchors.push(boxes);
    }
    Ok(AnchorGrid {
        levels,
        aspect_ratios: aspect_ratios.to_vec(),
        anchors,
    })
}

/// Level whose anchor scale is nearest to `sqrt(area)` in log space; ties go to
/// the finer level.
pub fn level_for_scale(bbox: &BBox, grid: &AnchorGrid) -> Result<usize> {
    let area = bbox.area();
    if area <= 0.0 {
        return Err(Error::DegenerateBox);
    }
    let size = libm::sqrt(area);
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (idx, level) in grid.levels.iter().enumerate() {
        let dist = libm::fabs(libm::log(size / level.scale));
        if dist < best_dist {
            best = idx;
            best_dist = dist;
        }
    }
    Ok(best)
}
