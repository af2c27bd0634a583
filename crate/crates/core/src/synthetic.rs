//! Seeded crowd scenes and a parameterized mock detector.
//!
//! Pedestrians are drawn in painter order: later ones occlude earlier ones. The
//! visible box of a pedestrian is the bounding box of the pixels it still owns
//! after everyone has been painted. Pedestrians that end up owning no pixel are
//! left out of the annotation.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::annotation::{Detection, ImageAnnotation, Instance};
use crate::augmentation::RasterImage;
use crate::error::{Error, Result};
use crate::geometry::{self, BBox};

/// Average pedestrians per image in dense surveillance footage.
pub const CROWD_MEAN_COUNT: f64 = 16.2;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CountDistribution {
    Fixed(usize),
    Poisson(f64),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default)
)]
pub struct SceneConfig {
    pub width: u32,
    pub height: u32,
    pub count: CountDistribution,
    pub min_height: f64,
    pub max_height: f64,
    /// Mean and standard deviation of the `h/w` ratio.
    pub aspect_mean: f64,
    pub aspect_spread: f64,
    /// Probability that a pedestrian is placed beside an earlier one instead of
    /// uniformly in the image.
    pub overlap: f64,
    /// Horizontal offset range, as a fraction of the neighbor's width, for
    /// pedestrians placed beside another.
    pub overlap_shift: (f64, f64),
    /// Head box size as fractions of the full-box width and height. The head
    /// sits at the top center.
    pub head_width: f64,
    pub head_height: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
            count: CountDistribution::Poisson(CROWD_MEAN_COUNT),
            min_height: 50.0,
            max_height: 220.0,
            aspect_mean: 2.44,
            aspect_spread: 0.2,
            overlap: 0.5,
            overlap_shift: (0.2, 0.8),
            head_width: 0.5,
            head_height: 0.2,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let (w, h) = (f64::from(self.width), f64::from(self.height));
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("scene dimensions must be positive"));
        }
        if !(self.min_height > 0.0 && self.min_height <= self.max_height) {
            return Err(Error::Config(
                "pedestrian heights must satisfy 0 < min <= max",
            ));
        }
        if self.max_height > h {
            return Err(Error::Config("pedestrian height exceeds the image height"));
        }
        if !(self.aspect_mean > 0.0 && self.aspect_spread >= 0.0) {
            return Err(Error::Config(
                "aspect ratio mean must be positive, spread non-negative",
            ));
        }
        if self.max_height / self.min_aspect() > w {
            return Err(Error::Config("pedestrian width can exceed the image width"));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(Error::Config("overlap probability must lie in [0, 1]"));
        }
        let (lo, hi) = self.overlap_shift;
        if !(0.0 <= lo && lo <= hi) {
            return Err(Error::Config(
                "overlap shift range must satisfy 0 <= lo <= hi",
            ));
        }
        if !(self.head_width > 0.0 && self.head_width <= 1.0)
            || !(self.head_height > 0.0 && self.head_height <= 1.0)
        {
            return Err(Error::Config("head fractions must lie in (0, 1]"));
        }
        match self.count {
            CountDistribution::Poisson(m) if !(m >= 0.0 && m.is_finite()) => Err(Error::Config(
                "mean pedestrian count must be finite and >= 0",
            )),
            _ => Ok(()),
        }
    }

    fn min_aspect(&self) -> f64 {
        (0.5 * self.aspect_mean).max(self.aspect_mean - 3.0 * self.aspect_spread)
    }

    fn max_aspect(&self) -> f64 {
        self.aspect_mean + 3.0 * self.aspect_spread
    }
}

/// A generated scene: the annotation plus every painted pedestrian, in paint
/// order, including the fully hidden ones absent from the annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub annotation: ImageAnnotation,
    pub painted: Vec<BBox>,
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn draw_count<R: Rng + ?Sized>(dist: CountDistribution, rng: &mut R) -> usize {
    match dist {
        CountDistribution::Fixed(n) => n,
        CountDistribution::Poisson(m) if m <= 0.0 => 0,
        CountDistribution::Poisson(m) => match Poisson::new(m) {
            Ok(p) => {
                let v: f64 = p.sample(rng);
                v as usize
            }
            Err(_) => 0,
        },
    }
}

fn place<R: Rng + ?Sized>(cfg: &SceneConfig, placed: &[BBox], rng: &mut R) -> Result<BBox> {
    let (img_w, img_h) = (f64::from(cfg.width), f64::from(cfg.height));
    let h = cfg.min_height + rng.random::<f64>() * (cfg.max_height - cfg.min_height);
    let aspect = (cfg.aspect_mean + cfg.aspect_spread * normal(rng))
        .clamp(cfg.min_aspect(), cfg.max_aspect());
    let w = h / aspect;
    let beside = !placed.is_empty() && rng.random_bool(cfg.overlap);
    let (mut x1, mut y1) = if beside {
        let other = placed[rng.random_range(0..placed.len())];
        let (lo, hi) = cfg.overlap_shift;
        let shift = (lo + rng.random::<f64>() * (hi - lo)) * other.width();
        let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let (ocx, _) = other.center();
        let bottom = other.y2() + 0.05 * other.height() * normal(rng);
        (ocx + side * shift - 0.5 * w, bottom - h)
    } else {
        (
            rng.random::<f64>() * (img_w - w),
            rng.random::<f64>() * (img_h - h),
        )
    };
    x1 = x1.clamp(0.0, img_w - w);
    y1 = y1.clamp(0.0, img_h - h);
    BBox::new(x1, y1, x1 + w, y1 + h)
}

fn covers_pixel_center(b: &BBox, x: usize, y: usize) -> bool {
    let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
    cx >= b.x1() && cx < b.x2() && cy >= b.y1() && cy < b.y2()
}

fn pixel_range(lo: f64, hi: f64, max: usize) -> core::ops::Range<usize> {
    let a = (libm::floor(lo).max(0.0) as usize).min(max);
    let b = (libm::ceil(hi).max(0.0) as usize).min(max);
    a..b
}

/// Index of the topmost pedestrian covering each pixel center, painter order.
pub fn ownership_map(boxes: &[BBox], width: usize, height: usize) -> Vec<Option<u32>> {
    let mut owner = alloc::vec![None; width * height];
    for (i, b) in boxes.iter().enumerate() {
        for y in pixel_range(b.y1(), b.y2(), height) {
            for x in pixel_range(b.x1(), b.x2(), width) {
                if covers_pixel_center(b, x, y) {
                    owner[y * width + x] = Some(i as u32);
                }
            }
        }
    }
    owner
}

/// Visible box of every painted pedestrian: bounding box of the pixels it owns,
/// clamped to its full box. `None` when fully hidden.
pub fn visible_boxes(boxes: &[BBox], width: usize, height: usize) -> Vec<Option<BBox>> {
    let owner = ownership_map(boxes, width, height);
    let mut extent: Vec<Option<(usize, usize, usize, usize)>> = alloc::vec![None; boxes.len()];
    for y in 0..height {
        for x in 0..width {
            if let Some(i) = owner[y * width + x] {
                let e = &mut extent[i as usize];
                *e = Some(match *e {
                    None => (x, y, x, y),
                    Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
                });
            }
        }
    }
    extent
        .iter()
        .zip(boxes)
        .map(|(e, full)| {
            e.map(|(x0, y0, x1, y1)| {
                BBox::new(x0 as f64, y0 as f64, (x1 + 1) as f64, (y1 + 1) as f64)
                    .expect("pixel extents are ordered")
                    .clamp_to(full)
            })
        })
        .collect()
}

pub fn head_box(full: &BBox, width_frac: f64, height_frac: f64) -> Result<BBox> {
    let (cx, _) = full.center();
    let w = width_frac * full.width();
    BBox::new(
        cx - 0.5 * w,
        full.y1(),
        cx + 0.5 * w,
        full.y1() + height_frac * full.height(),
    )
}

pub fn generate_scene(cfg: &SceneConfig, image_id: &str) -> Result<Scene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = draw_count(cfg.count, &mut rng);
    let mut painted = Vec::with_capacity(n);
    for _ in 0..n {
        let b = place(cfg, &painted, &mut rng)?;
        painted.push(b);
    }
    let visible = visible_boxes(&painted, cfg.width as usize, cfg.height as usize);
    let mut annotation = ImageAnnotation::new(image_id, cfg.width, cfg.height);
    for (full, vis) in painted.iter().zip(visible) {
        let Some(vis) = vis else { continue };
        let mut inst = Instance::new(annotation.instances.len(), *full);
        inst.visible = Some(vis);
        inst.head = Some(head_box(full, cfg.head_width, cfg.head_height)?);
        annotation.instances.push(inst);
    }
    annotation.validate()?;
    Ok(Scene {
        annotation,
        painted,
    })
}

impl Scene {
    /// Flat-colored raster: gray background, one color per pedestrian, heads a
    /// darker shade.
    pub fn render(&self, head_width: f64, head_height: f64) -> Result<RasterImage> {
        let (w, h) = (
            self.annotation.width as usize,
            self.annotation.height as usize,
        );
        let mut img = RasterImage::filled(w, h, [200.0, 200.0, 200.0]);
        for (i, b) in self.painted.iter().enumerate() {
            let body = palette(i);
            img.fill_region(b, body);
            let head = head_box(b, head_width, head_height)?;
            img.fill_region(&head, body.map(|c| libm::floorf(c * 0.5)));
        }
        Ok(img)
    }
}

fn palette(i: usize) -> [f32; 3] {
    let k = i as u32;
    [
        (40 + (k * 67) % 160) as f32,
        (30 + (k * 113) % 180) as f32,
        (50 + (k * 29) % 150) as f32,
    ]
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default)
)]
pub struct MockDetectorConfig {
    /// Standard deviation of each corner offset, as a fraction of box width (x)
    /// or height (y).
    pub noise: f64,
    /// Probability that a pedestrian is not detected at all.
    pub miss_rate: f64,
    /// Probability of a box spanning each pair of pedestrians whose full boxes
    /// overlap above `pair_iou`.
    pub straddle_rate: f64,
    pub pair_iou: f64,
    /// Detections emitted per detected pedestrian (more than one makes the
    /// output usable as a proposal set).
    pub per_gt: usize,
    /// Score of a true detection: `score_base - score_slope * (1 - IoU)` plus
    /// Gaussian noise of `score_noise`, clamped to [0, 1].
    pub score_base: f64,
    pub score_slope: f64,
    pub score_noise: f64,
    pub straddle_score: f64,
    pub seed: u64,
}

impl Default for MockDetectorConfig {
    fn default() -> Self {
        Self {
            noise: 0.05,
            miss_rate: 0.0,
            straddle_rate: 0.0,
            pair_iou: 0.3,
            per_gt: 1,
            score_base: 0.9,
            score_slope: 1.0,
            score_noise: 0.05,
            straddle_score: 0.95,
            seed: 0,
        }
    }
}

impl MockDetectorConfig {
    pub fn validate(&self) -> Result<()> {
        for p in [
            self.miss_rate,
            self.straddle_rate,
            self.pair_iou,
            self.straddle_score,
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProbability(p));
            }
        }
        if !(self.noise >= 0.0 && self.score_noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::Config(
                "noise levels must be finite and non-negative",
            ));
        }
        if !(self.score_base.is_finite() && self.score_slope.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }
}

fn noisy_score<R: Rng + ?Sized>(base: f64, noise: f64, rng: &mut R) -> f64 {
    let s = base + noise * normal(rng);
    s.clamp(0.0, 1.0)
}

/// Detections for one annotated image. Ignore-flagged instances are skipped.
pub fn mock_detect(ann: &ImageAnnotation, cfg: &MockDetectorConfig) -> Result<Vec<Detection>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (img_w, img_h) = (f64::from(ann.width), f64::from(ann.height));
    let people: Vec<BBox> = ann
        .instances
        .iter()
        .filter(|i| !i.ignore)
        .map(|i| i.full)
        .collect();
    let mut out = Vec::new();
    for gt in &people {
        if rng.random_bool(cfg.miss_rate) {
            continue;
        }
        for _ in 0..cfg.per_gt {
            let (sx, sy) = (cfg.noise * gt.width(), cfg.noise * gt.height());
            let xa = gt.x1() + sx * normal(&mut rng);
            let ya = gt.y1() + sy * normal(&mut rng);
            let xb = gt.x2() + sx * normal(&mut rng);
            let yb = gt.y2() + sy * normal(&mut rng);
            let raw = BBox::new(xa.min(xb), ya.min(yb), xa.max(xb), ya.max(yb))?;
            let b = geometry::clip(&raw, img_w, img_h);
            let base = cfg.score_base - cfg.score_slope * (1.0 - geometry::iou(&b, gt));
            let score = noisy_score(base, cfg.score_noise, &mut rng);
            if b.width() > 0.0 && b.height() > 0.0 {
                out.push(Detection::new(ann.image_id.as_str(), b, score)?);
            }
        }
    }
    if cfg.straddle_rate > 0.0 {
        for (i, a) in people.iter().enumerate() {
            for c in &people[i + 1..] {
                if geometry::iou(a, c) > cfg.pair_iou && rng.random_bool(cfg.straddle_rate) {
                    let score = noisy_score(cfg.straddle_score, cfg.score_noise, &mut rng);
                    out.push(Detection::new(ann.image_id.as_str(), a.hull(c), score)?);
                }
            }
        }
    }
    Ok(out)
}

/// Scene and detections for image `index` of a seeded dataset. Scene and
/// detector streams are derived from `seed` so every image is reproducible on
/// its own.
pub fn synthesize_image(
    scene: &SceneConfig,
    detector: &MockDetectorConfig,
    seed: u64,
    index: usize,
) -> Result<(Scene, Vec<Detection>)> {
    let id = format!("synth_{index:06}");
    let scene_cfg = SceneConfig {
        seed: crate::derive_seed(seed, 2 * index as u64),
        ..scene.clone()
    };
    let det_cfg = MockDetectorConfig {
        seed: crate::derive_seed(seed, 2 * index as u64 + 1),
        ..detector.clone()
    };
    let s = generate_scene(&scene_cfg, &id)?;
    let dets = mock_detect(&s.annotation, &det_cfg)?;
    Ok((s, dets))
}
