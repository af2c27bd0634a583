//! Miss rate vs. false positives per image, and the log-average miss rate over
//! nine log-spaced FPPI reference points in `[1e-2, 1]`.
//!
//! Per image, detections are matched greedily in descending score order. A
//! detection takes the unmatched scored instance with the highest IoU if that
//! IoU reaches the threshold; otherwise it is discarded when it lies inside an
//! ignore instance (IoA against the ignore box), and counted as a false
//! positive if not. Because matching is greedy by score, the outcome for any
//! score cut-off is a prefix of the full matching, which lets the whole curve be
//! swept from one pass.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::annotation::{partition_for_eval, Detection, ImageAnnotation, Instance, SubsetSpec};
use crate::error::{Error, Result};
use crate::geometry::{ioa, iou, BBox};
use crate::postprocess::score_order;

pub const DEFAULT_MATCH_IOU: f64 = 0.5;
pub const NUM_REFERENCE_POINTS: usize = 9;
/// Floor applied to miss rates before taking logarithms.
pub const MISS_RATE_FLOOR: f64 = 1e-10;

/// `10^(-2 + k/4)` for `k = 0..8`.
pub fn reference_fppi() -> [f64; NUM_REFERENCE_POINTS] {
    core::array::from_fn(|k| libm::pow(10.0, -2.0 + k as f64 / 4.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Outcome {
    TruePositive {
        instance: usize,
    },
    FalsePositive,
    /// Inside an ignore region: neither rewarded nor penalized.
    Ignored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ImageTally {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub ignored_detections: usize,
}

/// Matching result for one image, detections in descending score order.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageMatch {
    pub scores: Vec<f64>,
    pub outcomes: Vec<Outcome>,
    pub num_evaluate: usize,
}

impl ImageMatch {
    pub fn tally(&self) -> ImageTally {
        self.tally_at(f64::NEG_INFINITY)
    }

    /// Counts over detections scoring at least `threshold`.
    pub fn tally_at(&self, threshold: f64) -> ImageTally {
        let mut t = ImageTally::default();
        for (s, o) in self.scores.iter().zip(&self.outcomes) {
            if *s < threshold {
                break;
            }
            match o {
                Outcome::TruePositive { .. } => t.true_positives += 1,
                Outcome::FalsePositive => t.false_positives += 1,
                Outcome::Ignored => t.ignored_detections += 1,
            }
        }
        t.false_negatives = self.num_evaluate - t.true_positives;
        t
    }
}

pub fn match_image(
    dets: &[Detection],
    evaluate: &[Instance],
    ignore: &[Instance],
    iou_thresh: f64,
) -> ImageMatch {
    let scores: Vec<f64> = dets.iter().map(|d| d.score).collect();
    let order = score_order(&scores);
    let eval_boxes: Vec<BBox> = evaluate.iter().map(|i| i.full).collect();
    let mut matched = alloc::vec![false; evaluate.len()];
    let mut outcomes = Vec::with_capacity(dets.len());
    for &d in &order {
        let bbox = &dets[d].bbox;
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in eval_boxes.iter().enumerate() {
            if matched[g] {
                continue;
            }
            let v = iou(bbox, gt);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((g, v));
            }
        }
        let outcome = match best {
            Some((g, v)) if v >= iou_thresh => {
                matched[g] = true;
                Outcome::TruePositive { instance: g }
            }
            _ if ignore.iter().any(|ig| ioa(bbox, &ig.full) >= iou_thresh) => Outcome::Ignored,
            _ => Outcome::FalsePositive,
        };
        outcomes.push(outcome);
    }
    ImageMatch {
        scores: order.iter().map(|&i| scores[i]).collect(),
        outcomes,
        num_evaluate: evaluate.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvePoint {
    pub threshold: f64,
    pub fppi: f64,
    pub miss_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalCurve {
    /// Descending threshold, non-decreasing FPPI.
    pub points: Vec<CurvePoint>,
    pub num_images: usize,
    pub num_ground_truth: usize,
}

/// One operating point per distinct detection score. Without any detections
/// the curve is the single point `(threshold = +inf, FPPI 0, miss 1)`.
pub fn sweep_curve(matches: &[ImageMatch]) -> Result<EvalCurve> {
    let num_images = matches.len();
    let num_ground_truth: usize = matches.iter().map(|m| m.num_evaluate).sum();
    if num_ground_truth == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    let mut all: Vec<(f64, Outcome)> = matches
        .iter()
        .flat_map(|m| m.scores.iter().copied().zip(m.outcomes.iter().copied()))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));

    let n_img = num_images as f64;
    let n_gt = num_ground_truth as f64;
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < all.len() {
        let s = all[i].0;
        while i < all.len() && all[i].0 == s {
            match all[i].1 {
                Outcome::TruePositive { .. } => tp += 1,
                Outcome::FalsePositive => fp += 1,
                Outcome::Ignored => {}
            }
            i += 1;
        }
        points.push(CurvePoint {
            threshold: s,
            fppi: fp as f64 / n_img,
            miss_rate: (num_ground_truth - tp) as f64 / n_gt,
        });
    }
    if points.is_empty() {
        points.push(CurvePoint {
            threshold: f64::INFINITY,
            fppi: 0.0,
            miss_rate: 1.0,
        });
    }
    Ok(EvalCurve {
        points,
        num_images,
        num_ground_truth,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MrResult {
    pub mr2: f64,
    pub reference_fppi: [f64; NUM_REFERENCE_POINTS],
    pub miss_rates: [f64; NUM_REFERENCE_POINTS],
}

/// Miss rate looked up at each reference FPPI (step interpolation: the last
/// point whose FPPI does not exceed the reference, or the lowest-FPPI point if
/// none does), then averaged in log space.
pub fn log_average_miss_rate(curve: &EvalCurve) -> Result<MrResult> {
    let points = &curve.points;
    if points.is_empty() {
        return Err(Error::EmptyCurve);
    }
    let reference = reference_fppi();
    let lowest = points
        .iter()
        .rposition(|p| p.fppi == points[0].fppi)
        .unwrap_or(0);
    let miss_rates = reference.map(|f| {
        let idx = points.iter().rposition(|p| p.fppi <= f).unwrap_or(lowest);
        points[idx].miss_rate
    });
    let floored = miss_rates.map(|m| m.max(MISS_RATE_FLOOR));
    // exp(ln m) need not round-trip; a flat curve returns its value unchanged.
    let mr2 = if floored.iter().all(|&m| m == floored[0]) {
        floored[0]
    } else {
        let mean_log =
            floored.iter().map(|&m| libm::log(m)).sum::<f64>() / NUM_REFERENCE_POINTS as f64;
        libm::exp(mean_log)
    };
    Ok(MrResult {
        mr2,
        reference_fppi: reference,
        miss_rates,
    })
}

/// Groups detections by image and checks that every image id is annotated.
pub fn group_detections(
    annotations: &[ImageAnnotation],
    detections: &[Detection],
) -> Result<Vec<Vec<Detection>>> {
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, ann) in annotations.iter().enumerate() {
        if index.insert(ann.image_id.as_str(), i).is_some() {
            return Err(Error::InvalidImage {
                image_id: ann.image_id.clone(),
                reason: "duplicate image id",
            });
        }
    }
    let mut grouped: Vec<Vec<Detection>> = alloc::vec![Vec::new(); annotations.len()];
    for d in detections {
        let Some(&i) = index.get(d.image_id.as_str()) else {
            return Err(Error::UnknownImage(String::from(d.image_id.as_str())));
        };
        grouped[i].push(d.clone());
    }
    Ok(grouped)
}

/// Partition and match one image.
pub fn match_annotated_image(
    ann: &ImageAnnotation,
    dets: &[Detection],
    spec: &SubsetSpec,
    iou_thresh: f64,
) -> ImageMatch {
    let part = partition_for_eval(ann, spec);
    match_image(dets, &part.evaluate, &part.ignore, iou_thresh)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEvaluation {
    pub curve: EvalCurve,
    pub result: MrResult,
}

pub fn evaluate_dataset_curve(
    annotations: &[ImageAnnotation],
    detections: &[Detection],
    spec: &SubsetSpec,
    iou_thresh: f64,
) -> Result<DatasetEvaluation> {
    spec.validate()?;
    let grouped = group_detections(annotations, detections)?;
    let matches: Vec<ImageMatch> = annotations
        .iter()
        .zip(&grouped)
        .map(|(ann, dets)| match_annotated_image(ann, dets, spec, iou_thresh))
        .collect();
    let curve = sweep_curve(&matches)?;
    let result = log_average_miss_rate(&curve)?;
    Ok(DatasetEvaluation { curve, result })
}

pub fn evaluate_dataset(
    annotations: &[ImageAnnotation],
    detections: &[Detection],
    spec: &SubsetSpec,
    iou_thresh: f64,
) -> Result<MrResult> {
    evaluate_dataset_curve(annotations, detections, spec, iou_thresh).map(|e| e.result)
}
