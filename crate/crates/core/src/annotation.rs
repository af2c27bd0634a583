//! Per-image annotation model: full-body, visible-region and head boxes for each
//! person, detections, and the height/occlusion subsets used during evaluation.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::BBox;

/// Relative slack when checking that a visible box lies inside its full box.
pub const CONTAINMENT_TOLERANCE: f64 = 1e-6;

/// One annotated person.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Instance {
    /// Ordinal of the instance within its image.
    pub id: usize,
    pub full: BBox,
    pub visible: Option<BBox>,
    pub head: Option<BBox>,
    pub ignore: bool,
}

impl Instance {
    pub fn new(id: usize, full: BBox) -> Self {
        Self {
            id,
            full,
            visible: None,
            head: None,
            ignore: false,
        }
    }

    /// Clamps the visible box into the full box, the normalization applied on
    /// ingestion.
    pub fn clip_visible_to_full(&mut self) {
        if let Some(v) = self.visible.as_mut() {
            *v = v.clamp_to(&self.full);
        }
    }

    fn check(&self) -> core::result::Result<(), &'static str> {
        if let Some(v) = &self.visible {
            let inside = v.intersection(&self.full).map_or(0.0, |b| b.area());
            if v.area() - inside > CONTAINMENT_TOLERANCE * v.area() {
                return Err("visible box extends outside the full box");
            }
        }
        if let Some(h) = &self.head {
            if h.area() <= 0.0 {
                return Err("head box has zero area");
            }
        }
        Ok(())
    }
}

/// All instances annotated on one image.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ImageAnnotation {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub instances: Vec<Instance>,
}

impl ImageAnnotation {
    pub fn new(image_id: impl Into<String>, width: u32, height: u32) -> Self {
        Self {
            image_id: image_id.into(),
            width,
            height,
            instances: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidImage {
                image_id: self.image_id.clone(),
                reason: "image width and height must be positive",
            });
        }
        for (i, inst) in self.instances.iter().enumerate() {
            if self.instances[..i].iter().any(|o| o.id == inst.id) {
                return Err(Error::InvalidInstance {
                    image_id: self.image_id.clone(),
                    instance: inst.id,
                    reason: "duplicate instance id",
                });
            }
            inst.check().map_err(|reason| Error::InvalidInstance {
                image_id: self.image_id.clone(),
                instance: inst.id,
                reason,
            })?;
        }
        Ok(())
    }

    pub fn full_boxes(&self) -> Vec<BBox> {
        self.instances.iter().map(|i| i.full).collect()
    }
}

/// A scored box produced by a detector on one image.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Detection {
    pub image_id: String,
    pub bbox: BBox,
    pub score: f64,
}

impl Detection {
    pub fn new(image_id: impl Into<String>, bbox: BBox, score: f64) -> Result<Self> {
        if !score.is_finite() || !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidScore(score));
        }
        Ok(Self {
            image_id: image_id.into(),
            bbox,
            score,
        })
    }
}

/// Fraction of the full box hidden: `1 - area(visible ∩ full) / area(full)`.
/// An instance without a visible box counts as fully visible.
pub fn occlusion_ratio(inst: &Instance) -> Result<f64> {
    let full_area = inst.full.area();
    if full_area <= 0.0 {
        return Err(Error::DegenerateInstance);
    }
    let Some(visible) = inst.visible else {
        return Ok(0.0);
    };
    let seen = visible.intersection(&inst.full).map_or(0.0, |b| b.area());
    Ok((1.0 - seen / full_area).clamp(0.0, 1.0))
}

/// Height and occlusion filter selecting which instances are scored.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubsetSpec {
    pub min_height: f64,
    /// Half-open `[lo, hi)`; an upper bound of exactly 1 also admits fully
    /// occluded instances.
    pub occlusion_lo: f64,
    pub occlusion_hi: f64,
}

impl SubsetSpec {
    /// At least 50 px tall, occlusion below 35%.
    pub const REASONABLE: SubsetSpec = SubsetSpec {
        min_height: 50.0,
        occlusion_lo: 0.0,
        occlusion_hi: 0.35,
    };
    /// At least 50 px tall, occlusion in [35%, 80%).
    pub const HEAVY: SubsetSpec = SubsetSpec {
        min_height: 50.0,
        occlusion_lo: 0.35,
        occlusion_hi: 0.8,
    };
    /// Every non-ignored instance.
    pub const ALL: SubsetSpec = SubsetSpec {
        min_height: 0.0,
        occlusion_lo: 0.0,
        occlusion_hi: 1.0,
    };

    pub fn new(min_height: f64, occlusion_lo: f64, occlusion_hi: f64) -> Result<Self> {
        let spec = Self {
            min_height,
            occlusion_lo,
            occlusion_hi,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_height >= 0.0 && self.min_height.is_finite()) {
            return Err(Error::Config("min_height must be finite and >= 0"));
        }
        if !(0.0 <= self.occlusion_lo
            && self.occlusion_lo < self.occlusion_hi
            && self.occlusion_hi <= 1.0)
        {
            return Err(Error::Config(
                "occlusion range must satisfy 0 <= lo < hi <= 1",
            ));
        }
        Ok(())
    }

    pub fn admits_occlusion(&self, occlusion: f64) -> bool {
        occlusion >= self.occlusion_lo
            && (occlusion < self.occlusion_hi || (self.occlusion_hi >= 1.0 && occlusion <= 1.0))
    }

    /// Whether a non-ignored instance belongs to the scored set.
    pub fn admits(&self, inst: &Instance) -> bool {
        if inst.ignore || inst.full.height() < self.min_height {
            return false;
        }
        occlusion_ratio(inst).is_ok_and(|occ| self.admits_occlusion(occ))
    }
}

/// Instances split into the scored set and the ignore set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Partition {
    pub evaluate: Vec<Instance>,
    pub ignore: Vec<Instance>,
}

/// Routes every instance to exactly one side. Ignore-flagged instances, those
/// below the height cut, outside the occlusion range, or with a degenerate full
/// box go to the ignore side.
pub fn partition_for_eval(ann: &ImageAnnotation, spec: &SubsetSpec) -> Partition {
    let (evaluate, ignore) = ann
        .instances
        .iter()
        .cloned()
        .partition(|inst| spec.admits(inst));
    Partition { evaluate, ignore }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    fn person(height: f64, occlusion: f64) -> Instance {
        let full = b(0., 0., 20., height);
        let mut inst = Instance::new(0, full);
        inst.visible = Some(b(0., 0., 20., height * (1.0 - occlusion)));
        inst
    }

    #[test]
    fn occlusion_examples() {
        let full = b(0., 0., 10., 10.);
        let mut inst = Instance::new(0, full);
        assert_eq!(occlusion_ratio(&inst).unwrap(), 0.0);
        inst.visible = Some(full);
        assert_eq!(occlusion_ratio(&inst).unwrap(), 0.0);
        inst.visible = Some(b(0., 0., 10., 8.));
        assert!((occlusion_ratio(&inst).unwrap() - 0.2).abs() < 1e-12);
        let flat = Instance::new(0, b(0., 0., 10., 0.));
        assert_eq!(occlusion_ratio(&flat), Err(Error::DegenerateInstance));
    }

    #[test]
    fn partition_examples() {
        let mut ann = ImageAnnotation::new("a", 100, 100);
        ann.instances.push(person(60., 0.1));
        let p = partition_for_eval(&ann, &SubsetSpec::REASONABLE);
        assert_eq!((p.evaluate.len(), p.ignore.len()), (1, 0));

        ann.instances[0] = person(40., 0.1);
        let p = partition_for_eval(&ann, &SubsetSpec::REASONABLE);
        assert_eq!((p.evaluate.len(), p.ignore.len()), (0, 1));

        ann.instances[0] = person(60., 0.5);
        let p = partition_for_eval(&ann, &SubsetSpec::HEAVY);
        assert_eq!(p.evaluate.len(), 1);
        let p = partition_for_eval(&ann, &SubsetSpec::REASONABLE);
        assert_eq!(p.ignore.len(), 1);

        ann.instances[0] = person(60., 0.0);
        ann.instances[0].ignore = true;
        let p = partition_for_eval(&ann, &SubsetSpec::ALL);
        assert_eq!(p.ignore.len(), 1);
    }

    #[test]
    fn all_subset_admits_full_occlusion() {
        let mut inst = Instance::new(0, b(0., 0., 10., 10.));
        inst.visible = Some(b(0., 0., 0., 10.));
        assert_eq!(occlusion_ratio(&inst).unwrap(), 1.0);
        assert!(SubsetSpec::ALL.admits(&inst));
        assert!(!SubsetSpec::HEAVY.admits(&inst));
    }

    #[test]
    fn subset_validation() {
        assert!(SubsetSpec::new(50., 0.4, 0.4).is_err());
        assert!(SubsetSpec::new(-1., 0.0, 0.4).is_err());
        assert!(SubsetSpec::new(0., 0.0, 1.1).is_err());
        assert!(SubsetSpec::new(0., 0.0, 1.0).is_ok());
    }

    #[test]
    fn annotation_validation() {
        let mut ann = ImageAnnotation::new("img", 100, 100);
        let mut inst = Instance::new(0, b(10., 10., 60., 130.));
        inst.visible = Some(b(10., 10., 60., 80.));
        inst.head = Some(b(25., 10., 45., 30.));
        ann.instances.push(inst.clone());
        assert!(ann.validate().is_ok());

        ann.instances.push(inst.clone());
        assert!(matches!(
            ann.validate(),
            Err(Error::InvalidInstance {
                instance: 0,
                reason: "duplicate instance id",
                ..
            })
        ));
        ann.instances.pop();

        ann.instances[0].visible = Some(b(0., 10., 60., 80.));
        assert!(ann.validate().is_err());
        ann.instances[0].clip_visible_to_full();
        assert!(ann.validate().is_ok());

        ann.instances[0].head = Some(b(25., 10., 25., 30.));
        assert!(ann.validate().is_err());

        assert!(ImageAnnotation::new("z", 0, 10).validate().is_err());
    }

    #[test]
    fn detection_score_range() {
        let bx = b(0., 0., 1., 1.);
        assert!(Detection::new("a", bx, 1.0).is_ok());
        assert_eq!(Detection::new("a", bx, 1.5), Err(Error::InvalidScore(1.5)));
        assert!(Detection::new("a", bx, f64::NAN).is_err());
    }
}
