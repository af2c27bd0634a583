//! Occlusion-simulated augmentation.
//!
//! Each ground truth is cut into five parts: a head band on top, a torso band
//! split into left and right halves, and a leg band split likewise. With
//! probability `p` one non-head part is painted over with a constant fill color.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::BBox;

/// Per-channel ImageNet mean in RGB order, on a 0-255 scale.
pub const IMAGENET_MEAN_RGB: [f32; 3] = [123.675, 116.28, 103.53];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Part {
    Head,
    LeftUpper,
    RightUpper,
    LeftLeg,
    RightLeg,
}

impl Part {
    pub const ALL: [Part; 5] = [
        Part::Head,
        Part::LeftUpper,
        Part::RightUpper,
        Part::LeftLeg,
        Part::RightLeg,
    ];
    pub const OCCLUDABLE: [Part; 4] = [
        Part::LeftUpper,
        Part::RightUpper,
        Part::LeftLeg,
        Part::RightLeg,
    ];
}

/// Band heights as fractions of the box height; the leg band takes the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PartRatios {
    pub head: f64,
    pub torso: f64,
}

impl Default for PartRatios {
    fn default() -> Self {
        Self {
            head: 0.2,
            torso: 0.4,
        }
    }
}

impl PartRatios {
    pub fn validate(&self) -> Result<()> {
        if !(self.head > 0.0 && self.torso > 0.0 && self.head + self.torso < 1.0) {
            return Err(Error::Config(
                "part ratios must be positive and leave room for legs",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartRegion {
    pub part: Part,
    pub region: BBox,
}

pub fn part_regions(gt: &BBox) -> Result<[PartRegion; 5]> {
    part_regions_with(gt, &PartRatios::default())
}

pub fn part_regions_with(gt: &BBox, ratios: &PartRatios) -> Result<[PartRegion; 5]> {
    ratios.validate()?;
    if gt.area() <= 0.0 {
        return Err(Error::DegenerateBox);
    }
    let (x1, y1, x2, y2) = (gt.x1(), gt.y1(), gt.x2(), gt.y2());
    let h = gt.height();
    let neck = y1 + ratios.head * h;
    let hip = neck + ratios.torso * h;
    let mid = 0.5 * (x1 + x2);
    let region = |part, a, b, c, d| -> Result<PartRegion> {
        Ok(PartRegion {
            part,
            region: BBox::new(a, b, c, d)?,
        })
    };
    Ok([
        region(Part::Head, x1, y1, x2, neck)?,
        region(Part::LeftUpper, x1, neck, mid, hip)?,
        region(Part::RightUpper, mid, neck, x2, hip)?,
        region(Part::LeftLeg, x1, hip, mid, y2)?,
        region(Part::RightLeg, mid, hip, x2, y2)?,
    ])
}

/// Which part, if any, is blanked for every ground truth of one image.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OcclusionPlan {
    pub seed: u64,
    pub probability: f64,
    pub fill: [f32; 3],
    pub ratios: PartRatios,
    pub decisions: Vec<Option<Part>>,
}

impl OcclusionPlan {
    pub fn occluded(&self) -> usize {
        self.decisions.iter().flatten().count()
    }
}

pub fn plan_occlusion(gts: &[BBox], probability: f64, seed: u64) -> Result<OcclusionPlan> {
    if !(0.0..=1.0).contains(&probability) {
        return Err(Error::InvalidProbability(probability));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let decisions = gts
        .iter()
        .map(|_| {
            rng.random_bool(probability)
                .then(|| Part::OCCLUDABLE[rng.random_range(0..Part::OCCLUDABLE.len())])
        })
        .collect();
    Ok(OcclusionPlan {
        seed,
        probability,
        fill: IMAGENET_MEAN_RGB,
        ratios: PartRatios::default(),
        decisions,
    })
}

pub const CHANNELS: usize = 3;

/// Interleaved RGB raster, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        let expected = width * height * CHANNELS;
        if data.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, color: [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * CHANNELS);
        for _ in 0..width * height {
            data.extend_from_slice(&color);
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let o = (y * self.width + x) * CHANNELS;
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, color: [f32; 3]) {
        let o = (y * self.width + x) * CHANNELS;
        self.data[o..o + CHANNELS].copy_from_slice(&color);
    }

    /// Paints the pixel rectangle covering `region` (see [`pixel_span`]).
    pub fn fill_region(&mut self, region: &BBox, color: [f32; 3]) {
        let (xs, ys) = pixel_span(region, self.width, self.height);
        for y in ys {
            for x in xs.clone() {
                self.set_pixel(x, y, color);
            }
        }
    }
}

/// Pixel columns and rows touched by a continuous region: floor on the minimum
/// corner, ceil on the maximum, clipped to the raster.
pub fn pixel_span(
    region: &BBox,
    width: usize,
    height: usize,
) -> (core::ops::Range<usize>, core::ops::Range<usize>) {
    let lo = |v: f64, max: usize| (libm::floor(v).max(0.0) as usize).min(max);
    let hi = |v: f64, max: usize| (libm::ceil(v).max(0.0) as usize).min(max);
    (
        lo(region.x1(), width)..hi(region.x2(), width),
        lo(region.y1(), height)..hi(region.y2(), height),
    )
}

/// Regions a plan blanks, in ground-truth order.
pub fn planned_regions(gts: &[BBox], plan: &OcclusionPlan) -> Result<Vec<BBox>> {
    if plan.decisions.len() != gts.len() {
        return Err(Error::ShapeMismatch {
            expected: gts.len(),
            found: plan.decisions.len(),
        });
    }
    let mut out = Vec::new();
    for (gt, decision) in gts.iter().zip(&plan.decisions) {
        let Some(part) = decision else { continue };
        if *part == Part::Head {
            return Err(Error::Config("occlusion plan selects a head region"));
        }
        let regions = part_regions_with(gt, &plan.ratios)?;
        out.extend(regions.iter().filter(|r| r.part == *part).map(|r| r.region));
    }
    Ok(out)
}

/// Returns a copy of `img` with every planned part painted with the plan's fill
/// color. Pixels outside the planned parts are untouched.
pub fn apply_occlusion(
    img: &RasterImage,
    gts: &[BBox],
    plan: &OcclusionPlan,
) -> Result<RasterImage> {
    let mut out = img.clone();
    for region in planned_regions(gts, plan)? {
        out.fill_region(&region, plan.fill);
    }
    Ok(out)
}
