//! Greedy non-maximum suppression and top-k truncation.

use alloc::vec::Vec;

use crate::annotation::Detection;
use crate::error::{Error, Result};
use crate::geometry::BBox;

pub const DEFAULT_NMS_IOU: f64 = 0.5;
pub const DEFAULT_TOP_K: usize = 100;

/// Indices ordered by descending score; equal scores keep input order.
pub fn score_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Greedy hard NMS over parallel box/score slices. Returns kept indices in
/// descending score order. A box survives iff its IoU with every kept
/// higher-ranked box is at most `iou_thresh`.
pub fn nms_indices(boxes: &[BBox], scores: &[f64], iou_thresh: f64) -> Vec<usize> {
    debug_assert_eq!(boxes.len(), scores.len());
    let order = score_order(scores);
    let areas: Vec<f64> = boxes.iter().map(BBox::area).collect();
    let mut suppressed = alloc::vec![false; boxes.len()];
    let mut keep = Vec::new();
    for (rank, &i) in order.iter().enumerate() {
        if suppressed[i] {
            continue;
        }
        keep.push(i);
        let a = &boxes[i];
        for &j in &order[rank + 1..] {
            if suppressed[j] {
                continue;
            }
            let c = &boxes[j];
            let w = a.x2().min(c.x2()) - a.x1().max(c.x1());
            let h = a.y2().min(c.y2()) - a.y1().max(c.y1());
            if w <= 0.0 || h <= 0.0 {
                continue;
            }
            let inter = w * h;
            let union = areas[i] + areas[j] - inter;
            if union > 0.0 && inter / union > iou_thresh {
                suppressed[j] = true;
            }
        }
    }
    keep
}

fn check_single_image(dets: &[Detection]) -> Result<()> {
    if let Some(first) = dets.first() {
        if let Some(other) = dets.iter().find(|d| d.image_id != first.image_id) {
            return Err(Error::MixedImageIds(
                first.image_id.clone(),
                other.image_id.clone(),
            ));
        }
    }
    Ok(())
}

/// NMS over the detections of one image, output sorted by descending score.
pub fn nms(dets: &[Detection], iou_thresh: f64) -> Result<Vec<Detection>> {
    check_single_image(dets)?;
    let boxes: Vec<BBox> = dets.iter().map(|d| d.bbox).collect();
    let scores: Vec<f64> = dets.iter().map(|d| d.score).collect();
    Ok(nms_indices(&boxes, &scores, iou_thresh)
        .into_iter()
        .map(|i| dets[i].clone())
        .collect())
}

/// The `k` highest-scoring detections, descending, stable on ties.
pub fn top_k(dets: &[Detection], k: usize) -> Vec<Detection> {
    let scores: Vec<f64> = dets.iter().map(|d| d.score).collect();
    score_order(&scores)
        .into_iter()
        .take(k)
        .map(|i| dets[i].clone())
        .collect()
}

/// NMS followed by top-k, the inference-time cleanup for one image.
pub fn postprocess_image(dets: &[Detection], iou_thresh: f64, k: usize) -> Result<Vec<Detection>> {
    let kept = nms(dets, iou_thresh)?;
    Ok(top_k(&kept, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(x1: f64, y1: f64, x2: f64, y2: f64, score: f64) -> Detection {
        Detection::new("img", BBox::new(x1, y1, x2, y2).unwrap(), score).unwrap()
    }

    #[test]
    fn duplicate_suppressed() {
        let dets = [det(0., 0., 10., 10., 0.8), det(0., 0., 10., 10., 0.9)];
        let kept = nms(&dets, 0.5).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].score, 0.9);
    }

    #[test]
    fn disjoint_kept_sorted() {
        let dets = [det(0., 0., 10., 10., 0.3), det(20., 20., 30., 30., 0.6)];
        let kept = nms(&dets, 0.5).unwrap();
        assert_eq!(kept.iter().map(|d| d.score).collect::<Vec<_>>(), [0.6, 0.3]);
    }

    #[test]
    fn threshold_is_inclusive_keep() {
        // IoU exactly 1/3 with a threshold of 1/3 is kept.
        let dets = [det(0., 0., 10., 10., 0.9), det(5., 0., 15., 10., 0.8)];
        assert_eq!(nms(&dets, 1.0 / 3.0).unwrap().len(), 2);
        assert_eq!(nms(&dets, 0.3).unwrap().len(), 1);
    }

    #[test]
    fn tie_order_is_input_order() {
        let dets = [det(0., 0., 10., 10., 0.5), det(1., 0., 11., 10., 0.5)];
        let kept = nms(&dets, 0.5).unwrap();
        assert_eq!(kept, [dets[0].clone()]);
    }

    #[test]
    fn mixed_images_rejected() {
        let mut other = det(0., 0., 1., 1., 0.5);
        other.image_id = "b".into();
        assert!(matches!(
            nms(&[det(0., 0., 1., 1., 0.5), other], 0.5),
            Err(Error::MixedImageIds(..))
        ));
    }

    #[test]
    fn top_k_cases() {
        let dets: Vec<Detection> = (0..5)
            .map(|i| det(0., 0., 1., 1., f64::from(i) / 10.0))
            .collect();
        assert!(top_k(&dets, 0).is_empty());
        assert_eq!(top_k(&dets, 10).len(), 5);
        let two = top_k(&dets, 2);
        assert_eq!(two.iter().map(|d| d.score).collect::<Vec<_>>(), [0.4, 0.3]);
    }
}
