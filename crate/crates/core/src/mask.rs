//! Head-mask supervision targets and the loss terms of the detector head.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{BBox, BoxDeltas};

pub const DEFAULT_MASK_SIZE: usize = 28;
/// Probability clamp applied before taking logarithms.
pub const PROB_EPS: f64 = 1e-7;

/// Square binary mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    side: usize,
    cells: Vec<u8>,
}

impl BinaryMask {
    pub fn zeros(side: usize) -> Result<Self> {
        if side == 0 {
            return Err(Error::Config("mask side must be at least 1"));
        }
        Ok(Self {
            side,
            cells: alloc::vec![0; side * side],
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.side + col]
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn count_ones(&self) -> usize {
        self.cells.iter().filter(|&&c| c == 1).count()
    }
}

/// Marks cell `(i, j)` when its center, mapped linearly into the proposal,
/// lies inside `head ∩ proposal` (closed boxes). No head gives an empty mask.
pub fn rasterize_head_mask(
    proposal: &BBox,
    head: Option<&BBox>,
    side: usize,
) -> Result<BinaryMask> {
    let mut mask = BinaryMask::zeros(side)?;
    if proposal.width() <= 0.0 || proposal.height() <= 0.0 {
        return Err(Error::DegenerateBox);
    }
    let Some(region) = head.and_then(|h| h.intersection(proposal)) else {
        return Ok(mask);
    };
    let m = side as f64;
    for i in 0..side {
        let cy = proposal.y1() + (i as f64 + 0.5) / m * proposal.height();
        for j in 0..side {
            let cx = proposal.x1() + (j as f64 + 0.5) / m * proposal.width();
            if region.contains_point(cx, cy) {
                mask.cells[i * side + j] = 1;
            }
        }
    }
    Ok(mask)
}

fn check_pred(pred: &[f64], target: &BinaryMask) -> Result<()> {
    let expected = target.side * target.side;
    if pred.len() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            found: pred.len(),
        });
    }
    if let Some(&p) = pred.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidProbability(p));
    }
    Ok(())
}

/// Mean binary cross-entropy over all cells, predictions clamped to
/// `[PROB_EPS, 1 - PROB_EPS]`.
pub fn bce_loss(pred: &[f64], target: &BinaryMask) -> Result<f64> {
    check_pred(pred, target)?;
    let sum: f64 = pred
        .iter()
        .zip(&target.cells)
        .map(|(&p, &t)| {
            let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
            let t = f64::from(t);
            -(t * libm::log(p) + (1.0 - t) * libm::log(1.0 - p))
        })
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Derivative of [`bce_loss`] with respect to each prediction:
/// `(p - t) / (p (1 - p)) / n`. Zero where the clamp is active.
pub fn bce_grad(pred: &[f64], target: &BinaryMask) -> Result<Vec<f64>> {
    check_pred(pred, target)?;
    let n = pred.len() as f64;
    Ok(pred
        .iter()
        .zip(&target.cells)
        .map(|(&p, &t)| {
            if !(PROB_EPS..=1.0 - PROB_EPS).contains(&p) {
                return 0.0;
            }
            (p - f64::from(t)) / (p * (1.0 - p)) / n
        })
        .collect())
}

/// Negative log-likelihood of `label` under a probability vector.
pub fn cls_loss(probs: &[f64], label: usize) -> Result<f64> {
    if label >= probs.len() {
        return Err(Error::LabelOutOfRange {
            label,
            classes: probs.len(),
        });
    }
    if probs.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite);
    }
    if let Some(&p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidProbability(p));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized(total));
    }
    Ok(-libm::log(probs[label].max(PROB_EPS)))
}

pub fn smooth_l1(d: f64) -> f64 {
    let a = d.abs();
    if a < 1.0 {
        0.5 * d * d
    } else {
        a - 0.5
    }
}

/// Smooth-L1 summed over the four delta components.
pub fn box_loss(pred: &BoxDeltas, target: &BoxDeltas) -> Result<f64> {
    if !pred.is_finite() || !target.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(pred
        .to_array()
        .iter()
        .zip(target.to_array())
        .map(|(p, t)| smooth_l1(p - t))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossConfig {
    pub box_weight: f64,
    pub mask_weight: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            box_weight: 1.0,
            mask_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossBreakdown {
    pub cls: f64,
    pub bbox: f64,
    pub mask: f64,
    pub total: f64,
}

pub fn total_loss(cls: f64, bbox: f64, mask: f64, cfg: &LossConfig) -> Result<LossBreakdown> {
    for v in [cfg.box_weight, cfg.mask_weight, cls, bbox, mask] {
        if !v.is_finite() {
            return Err(Error::NonFinite);
        }
        if v < 0.0 {
            return Err(Error::Negative(v));
        }
    }
    Ok(LossBreakdown {
        cls,
        bbox,
        mask,
        total: cls + cfg.box_weight * bbox + cfg.mask_weight * mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    #[test]
    fn containment_and_disjoint() {
        let p = b(10., 10., 50., 90.);
        let all = rasterize_head_mask(&p, Some(&b(0., 0., 100., 100.)), 28).unwrap();
        assert_eq!(all.count_ones(), 28 * 28);
        let none = rasterize_head_mask(&p, Some(&b(60., 0., 80., 10.)), 28).unwrap();
        assert_eq!(none.count_ones(), 0);
        assert_eq!(rasterize_head_mask(&p, None, 28).unwrap().count_ones(), 0);
        assert!(rasterize_head_mask(&b(0., 0., 0., 5.), None, 28).is_err());
        assert!(rasterize_head_mask(&p, None, 0).is_err());
    }

    #[test]
    fn left_half_head() {
        let p = b(0., 0., 56., 84.);
        let m = rasterize_head_mask(&p, Some(&b(0., 0., 28., 84.)), 28).unwrap();
        for i in 0..28 {
            for j in 0..28 {
                assert_eq!(m.get(i, j), u8::from(j < 14), "({i}, {j})");
            }
        }
    }

    #[test]
    fn bce_values() {
        let mut t = BinaryMask::zeros(2).unwrap();
        t.cells = alloc::vec![1, 0, 0, 1];
        let perfect = bce_loss(&[1.0, 0.0, 0.0, 1.0], &t).unwrap();
        assert!((perfect - -libm::log(1.0 - PROB_EPS)).abs() < 1e-15);
        let half = bce_loss(&[0.5; 4], &t).unwrap();
        assert!((half - core::f64::consts::LN_2).abs() < 1e-12);
        assert!(bce_loss(&[0.5; 3], &t).is_err());
        assert!(bce_loss(&[0.5, 0.5, 0.5, 1.5], &t).is_err());
    }

    #[test]
    fn cls_and_box_values() {
        assert_eq!(cls_loss(&[0.0, 1.0], 1).unwrap(), 0.0);
        assert!((cls_loss(&[0.25, 0.75], 0).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert!(cls_loss(&[0.5, 0.5], 2).is_err());
        assert!(cls_loss(&[0.5, 0.6], 0).is_err());
        assert!(cls_loss(&[f64::NAN, 1.0], 1).is_err());

        let z = BoxDeltas::default();
        assert_eq!(box_loss(&z, &z).unwrap(), 0.0);
        let half = BoxDeltas { dx: 0.5, ..z };
        assert_eq!(box_loss(&half, &z).unwrap(), 0.125);
        let two = BoxDeltas { dh: -2.0, ..z };
        assert_eq!(box_loss(&two, &z).unwrap(), 1.5);
        assert!(box_loss(
            &BoxDeltas {
                dw: f64::INFINITY,
                ..z
            },
            &z
        )
        .is_err());
    }

    #[test]
    fn weighted_total() {
        let cfg = LossConfig::default();
        assert_eq!(total_loss(1., 2., 3., &cfg).unwrap().total, 6.0);
        assert_eq!(total_loss(0.7, 0., 0., &cfg).unwrap().total, 0.7);
        let no_mask = LossConfig {
            mask_weight: 0.0,
            ..cfg
        };
        assert_eq!(total_loss(1., 2., 3., &no_mask).unwrap().total, 3.0);
        let neg = LossConfig {
            box_weight: -1.0,
            ..cfg
        };
        assert_eq!(total_loss(1., 1., 1., &neg), Err(Error::Negative(-1.0)));
    }
}
