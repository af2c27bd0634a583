//! Candidate-to-ground-truth matching for both detector stages, ground-truth
//! jittering, and the strict second-stage training set.
//!
//! Every candidate is labeled by its highest-IoU ground truth (ties to the
//! lowest index): positive at or above `positive_iou`, negative below
//! `negative_iou`, ignored in between. Jittered boxes go through the same rule;
//! nothing is force-labeled.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{self, encode_deltas, iou_matrix, BBox, BoxDeltas};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Stage {
    Rpn,
    Rcnn,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchConfig {
    pub positive_iou: f64,
    pub negative_iou: f64,
    pub stage: Stage,
}

impl MatchConfig {
    pub const RPN: MatchConfig = MatchConfig {
        positive_iou: 0.7,
        negative_iou: 0.3,
        stage: Stage::Rpn,
    };
    /// Strict second-stage criterion.
    pub const RCNN: MatchConfig = MatchConfig {
        positive_iou: 0.7,
        negative_iou: 0.5,
        stage: Stage::Rcnn,
    };
    /// Conventional second-stage matching at 0.5, the baseline the strict
    /// criterion is compared against.
    pub const RCNN_BASELINE: MatchConfig = MatchConfig {
        positive_iou: 0.5,
        negative_iou: 0.5,
        stage: Stage::Rcnn,
    };

    pub fn for_stage(stage: Stage) -> Self {
        match stage {
            Stage::Rpn => Self::RPN,
            Stage::Rcnn => Self::RCNN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.negative_iou
            && self.negative_iou <= self.positive_iou
            && self.positive_iou <= 1.0)
        {
            return Err(Error::Config(
                "match thresholds must satisfy 0 <= negative <= positive <= 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Label {
    Positive { gt: usize },
    Negative,
    Ignored,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleAssignment {
    pub candidate: usize,
    pub label: Label,
    /// IoU with the best-matching ground truth (0 without ground truths).
    pub max_iou: f64,
    /// Present iff the label is positive.
    pub target: Option<BoxDeltas>,
}

impl SampleAssignment {
    pub fn is_positive(&self) -> bool {
        matches!(self.label, Label::Positive { .. })
    }
}

pub fn match_samples(
    candidates: &[BBox],
    gts: &[BBox],
    cfg: &MatchConfig,
) -> Result<Vec<SampleAssignment>> {
    cfg.validate()?;
    let overlaps = iou_matrix(candidates, gts);
    let mut out = Vec::with_capacity(candidates.len());
    for (ci, cand) in candidates.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (gi, &v) in overlaps.row(ci).iter().enumerate() {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((gi, v));
            }
        }
        let (label, max_iou, target) = match best {
            None => (Label::Negative, 0.0, None),
            Some((gi, v)) if v >= cfg.positive_iou => {
                let deltas = encode_deltas(cand, &gts[gi])?;
                (Label::Positive { gt: gi }, v, Some(deltas))
            }
            Some((_, v)) if v < cfg.negative_iou => (Label::Negative, v, None),
            Some((_, v)) => (Label::Ignored, v, None),
        };
        out.push(SampleAssignment {
            candidate: ci,
            label,
            max_iou,
            target,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JitterConfig {
    /// Jittered copies per ground truth.
    pub count: usize,
    /// Offset bound as a fraction of the box width (x) or height (y).
    pub amplitude: f64,
    pub seed: u64,
}

impl Default for JitterConfig {
    fn default() -> Self {
        Self {
            count: 10,
            amplitude: 0.2,
            seed: 0,
        }
    }
}

impl JitterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.amplitude) {
            return Err(Error::Config("jitter amplitude must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Corner offsets `[dx1, dy1, dx2, dy2]`, each drawn independently from
/// `Uniform(-a*w, a*w)` (x) or `Uniform(-a*h, a*h)` (y).
pub fn sample_jitter_offsets<R: Rng + ?Sized>(gt: &BBox, amplitude: f64, rng: &mut R) -> [f64; 4] {
    let xr = amplitude * gt.width();
    let yr = amplitude * gt.height();
    let mut draw = |range: f64| (2.0 * rng.random::<f64>() - 1.0) * range;
    [draw(xr), draw(yr), draw(xr), draw(yr)]
}

/// `count` jittered copies of each ground truth, clipped to the image, tagged
/// with the index of their source. Copies that invert or collapse to zero width
/// or height are dropped.
pub fn jitter_with_rng<R: Rng + ?Sized>(
    gts: &[BBox],
    count: usize,
    amplitude: f64,
    image_w: f64,
    image_h: f64,
    rng: &mut R,
) -> Vec<(usize, BBox)> {
    let mut out = Vec::with_capacity(gts.len() * count);
    for (gi, gt) in gts.iter().enumerate() {
        for _ in 0..count {
            let [dx1, dy1, dx2, dy2] = sample_jitter_offsets(gt, amplitude, rng);
            let (x1, y1) = (gt.x1() + dx1, gt.y1() + dy1);
            let (x2, y2) = (gt.x2() + dx2, gt.y2() + dy2);
            if let Ok(b) = BBox::new(x1, y1, x2, y2) {
                let b = geometry::clip(&b, image_w, image_h);
                if b.width() > 0.0 && b.height() > 0.0 {
                    out.push((gi, b));
                }
            }
        }
    }
    out
}

/// Like [`jitter_ground_truths`], keeping the source ground-truth index.
pub fn jitter_indexed(
    gts: &[BBox],
    cfg: &JitterConfig,
    image_w: f64,
    image_h: f64,
) -> Result<Vec<(usize, BBox)>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(jitter_with_rng(
        gts,
        cfg.count,
        cfg.amplitude,
        image_w,
        image_h,
        &mut rng,
    ))
}

pub fn jitter_ground_truths(
    gts: &[BBox],
    cfg: &JitterConfig,
    image_w: f64,
    image_h: f64,
) -> Result<Vec<BBox>> {
    Ok(jitter_indexed(gts, cfg, image_w, image_h)?
        .into_iter()
        .map(|(_, b)| b)
        .collect())
}

/// Candidate boxes and their labels for second-stage training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    /// Proposals, then jittered ground truths, then the ground truths.
    pub candidates: Vec<BBox>,
    pub assignments: Vec<SampleAssignment>,
    pub num_proposals: usize,
    pub num_jittered: usize,
}

impl TrainingSet {
    pub fn positives(&self) -> impl Iterator<Item = &SampleAssignment> {
        self.assignments.iter().filter(|a| a.is_positive())
    }
}

/// Candidates for the classification/regression head: proposals plus jittered
/// and original ground truths, all matched under `cfg`.
pub fn build_rcnn_training_set(
    proposals: &[BBox],
    gts: &[BBox],
    cfg: &MatchConfig,
    jitter: &JitterConfig,
    image_w: f64,
    image_h: f64,
) -> Result<TrainingSet> {
    let jittered = jitter_ground_truths(gts, jitter, image_w, image_h)?;
    let mut candidates = Vec::with_capacity(proposals.len() + jittered.len() + gts.len());
    candidates.extend_from_slice(proposals);
    candidates.extend_from_slice(&jittered);
    candidates.extend(gts.iter().filter(|g| g.area() > 0.0));
    let assignments = match_samples(&candidates, gts, cfg)?;
    Ok(TrainingSet {
        candidates,
        assignments,
        num_proposals: proposals.len(),
        num_jittered: jittered.len(),
    })
}

/// A positive whose IoU with some other ground truth exceeds this straddles
/// two people.
pub const STRADDLE_IOU: f64 = 0.3;
pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleStats {
    pub positives: usize,
    pub negatives: usize,
    pub ignored: usize,
    /// Positives by matched IoU over ten equal bins of [0, 1]; IoU 1 lands in
    /// the last bin.
    pub iou_histogram: [usize; HISTOGRAM_BINS],
    pub straddling: usize,
    pub positives_per_gt: Vec<usize>,
}

/// Positive-sample statistics of one candidate set under two matching configs.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CriterionComparison {
    pub strict: SampleStats,
    pub baseline: SampleStats,
}

/// Builds the second-stage candidate set once (proposals, jittered and original
/// ground truths) and matches it under both `strict` and `baseline`.
pub fn compare_criteria(
    proposals: &[BBox],
    gts: &[BBox],
    strict: &MatchConfig,
    baseline: &MatchConfig,
    jitter: &JitterConfig,
    image_w: f64,
    image_h: f64,
) -> Result<CriterionComparison> {
    let set = build_rcnn_training_set(proposals, gts, strict, jitter, image_w, image_h)?;
    let loose = match_samples(&set.candidates, gts, baseline)?;
    Ok(CriterionComparison {
        strict: positive_sample_stats(&set.candidates, &set.assignments, gts),
        baseline: positive_sample_stats(&set.candidates, &loose, gts),
    })
}

impl SampleStats {
    /// Sums counts of another image into this one. Per-GT counts are appended.
    pub fn merge(&mut self, other: &SampleStats) {
        self.positives += other.positives;
        self.negatives += other.negatives;
        self.ignored += other.ignored;
        self.straddling += other.straddling;
        for (a, b) in self.iou_histogram.iter_mut().zip(other.iou_histogram) {
            *a += b;
        }
        self.positives_per_gt
            .extend_from_slice(&other.positives_per_gt);
    }
}

pub fn histogram_bin(iou: f64) -> usize {
    ((iou * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)
}

pub fn positive_sample_stats(
    candidates: &[BBox],
    assignments: &[SampleAssignment],
    gts: &[BBox],
) -> SampleStats {
    let mut stats = SampleStats {
        positives_per_gt: alloc::vec![0; gts.len()],
        ..SampleStats::default()
    };
    for a in assignments {
        match a.label {
            Label::Negative => stats.negatives += 1,
            Label::Ignored => stats.ignored += 1,
            Label::Positive { gt } => {
                stats.positives += 1;
                stats.positives_per_gt[gt] += 1;
                stats.iou_histogram[histogram_bin(a.max_iou)] += 1;
                let cand = &candidates[a.candidate];
                let straddles = gts
                    .iter()
                    .enumerate()
                    .any(|(gi, g)| gi != gt && geometry::iou(cand, g) > STRADDLE_IOU);
                if straddles {
                    stats.straddling += 1;
                }
            }
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    #[test]
    fn ignored_between_thresholds() {
        let gt = b(0., 0., 100., 100.);
        // 65 x 100 inside the GT: IoU 0.65
        let cand = b(0., 0., 65., 100.);
        let a = match_samples(&[cand], &[gt], &MatchConfig::RCNN).unwrap();
        assert_eq!(a[0].label, Label::Ignored);
        assert!(a[0].target.is_none());
        let a = match_samples(&[cand], &[gt], &MatchConfig::RCNN_BASELINE).unwrap();
        assert_eq!(a[0].label, Label::Positive { gt: 0 });
    }

    #[test]
    fn exact_match_is_positive_with_zero_deltas() {
        let gt = b(10., 10., 40., 90.);
        let a = match_samples(&[gt], &[gt], &MatchConfig::RCNN).unwrap();
        assert_eq!(a[0].label, Label::Positive { gt: 0 });
        assert_eq!(a[0].target, Some(BoxDeltas::default()));
    }

    #[test]
    fn no_ground_truth_means_negative() {
        let a = match_samples(&[b(0., 0., 1., 1.)], &[], &MatchConfig::RPN).unwrap();
        assert_eq!(a[0].label, Label::Negative);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let gt = b(0., 0., 10., 10.);
        let a = match_samples(&[gt], &[gt, gt], &MatchConfig::RPN).unwrap();
        assert_eq!(a[0].label, Label::Positive { gt: 0 });
    }

    #[test]
    fn invalid_thresholds() {
        let cfg = MatchConfig {
            positive_iou: 0.4,
            negative_iou: 0.5,
            stage: Stage::Rcnn,
        };
        assert!(match_samples(&[], &[], &cfg).is_err());
    }

    #[test]
    fn zero_amplitude_copies() {
        let gts = [b(10., 10., 30., 50.), b(50., 5., 60., 25.)];
        let cfg = JitterConfig {
            count: 4,
            amplitude: 0.0,
            seed: 3,
        };
        let out = jitter_ground_truths(&gts, &cfg, 100., 100.).unwrap();
        assert_eq!(out.len(), 8);
        assert!(out[..4].iter().all(|x| *x == gts[0]));
        assert!(out[4..].iter().all(|x| *x == gts[1]));
    }

    #[test]
    fn jitter_offsets_bounded_and_seeded() {
        let gt = b(200., 200., 300., 400.);
        let cfg = JitterConfig {
            count: 500,
            amplitude: 0.2,
            seed: 11,
        };
        let out = jitter_ground_truths(&[gt], &cfg, 1000., 1000.).unwrap();
        assert_eq!(out.len(), 500);
        for j in &out {
            assert!((j.x1() - gt.x1()).abs() <= 20.0 && (j.x2() - gt.x2()).abs() <= 20.0);
            assert!((j.y1() - gt.y1()).abs() <= 40.0 && (j.y2() - gt.y2()).abs() <= 40.0);
        }
        assert_eq!(
            out,
            jitter_ground_truths(&[gt], &cfg, 1000., 1000.).unwrap()
        );
        assert!(jitter_ground_truths(
            &[gt],
            &JitterConfig {
                amplitude: 1.0,
                ..cfg
            },
            1e3,
            1e3
        )
        .is_err());
    }

    #[test]
    fn straddling_proposal_is_not_positive() {
        // Two people of 40 x 100 overlapping by half; the proposal sits between them.
        let gts = [b(0., 0., 40., 100.), b(20., 0., 60., 100.)];
        let proposal = b(10., 0., 50., 100.);
        let ious: Vec<f64> = gts.iter().map(|g| geometry::iou(&proposal, g)).collect();
        assert!(ious.iter().all(|&v| (0.5..0.7).contains(&v)));
        let jitter = JitterConfig {
            count: 10,
            amplitude: 0.2,
            seed: 1,
        };
        let set =
            build_rcnn_training_set(&[proposal], &gts, &MatchConfig::RCNN, &jitter, 200., 200.)
                .unwrap();
        assert_eq!(set.assignments[0].label, Label::Ignored);
        for a in set.positives() {
            let Label::Positive { gt } = a.label else {
                unreachable!()
            };
            assert!(geometry::iou(&set.candidates[a.candidate], &gts[gt]) >= 0.7);
        }
    }

    #[test]
    fn gt_only_training_set_bounds() {
        let gt = b(50., 50., 90., 150.);
        let jitter = JitterConfig {
            count: 10,
            amplitude: 0.2,
            seed: 5,
        };
        let set =
            build_rcnn_training_set(&[], &[gt], &MatchConfig::RCNN, &jitter, 300., 300.).unwrap();
        let pos = set.positives().count();
        assert!((1..=11).contains(&pos), "{pos}");
        assert!(set.assignments.last().unwrap().is_positive());
    }

    #[test]
    fn stats_edge_cases() {
        let s = positive_sample_stats(&[], &[], &[]);
        assert_eq!(s, SampleStats::default());
        let gt = b(0., 0., 10., 10.);
        let a = match_samples(&[gt], &[gt], &MatchConfig::RCNN).unwrap();
        let s = positive_sample_stats(&[gt], &a, &[gt]);
        assert_eq!(s.positives, 1);
        assert_eq!(s.iou_histogram[HISTOGRAM_BINS - 1], 1);
        assert_eq!(s.positives_per_gt, [1]);
        assert_eq!(s.straddling, 0);
    }
}
