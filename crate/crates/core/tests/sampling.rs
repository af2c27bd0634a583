use crowdped_core::geometry::{decode_deltas, iou, BBox};
use crowdped_core::sampling::*;
use crowdped_core::synthetic::{generate_scene, mock_detect, MockDetectorConfig, SceneConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_box() -> impl Strategy<Value = BBox> {
    (0.0..200.0f64, 0.0..200.0f64, 1.0..80.0f64, 1.0..120.0f64)
        .prop_map(|(x, y, w, h)| BBox::from_xywh(x, y, w, h).unwrap())
}

fn arb_config() -> impl Strategy<Value = MatchConfig> {
    prop_oneof![
        Just(MatchConfig::RPN),
        Just(MatchConfig::RCNN),
        Just(MatchConfig::RCNN_BASELINE),
        (0.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b)| MatchConfig {
            positive_iou: a.max(b),
            negative_iou: a.min(b),
            stage: Stage::Rcnn,
        }),
    ]
}

// Brute-force labeler: scan every ground truth, keep the first maximum.
fn reference_label(c: &BBox, gts: &[BBox], cfg: &MatchConfig) -> (Label, f64) {
    let mut best = None;
    for (g, gt) in gts.iter().enumerate() {
        let v = iou(c, gt);
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((g, v)),
        }
    }
    match best {
        None => (Label::Negative, 0.0),
        Some((g, v)) if v >= cfg.positive_iou => (Label::Positive { gt: g }, v),
        Some((_, v)) if v < cfg.negative_iou => (Label::Negative, v),
        Some((_, v)) => (Label::Ignored, v),
    }
}

proptest! {
    #[test]
    fn labels_match_brute_force(
        cands in prop::collection::vec(arb_box(), 0..40),
        gts in prop::collection::vec(arb_box(), 0..8),
        cfg in arb_config(),
    ) {
        let out = match_samples(&cands, &gts, &cfg).unwrap();
        prop_assert_eq!(out.len(), cands.len());
        for (a, c) in out.iter().zip(&cands) {
            let (label, v) = reference_label(c, &gts, &cfg);
            prop_assert_eq!(a.label, label);
            prop_assert_eq!(a.max_iou, v);
            match (a.label, a.target) {
                (Label::Positive { gt }, Some(t)) => {
                    let back = decode_deltas(c, &t).unwrap();
                    for (x, y) in back.to_array().iter().zip(gts[gt].to_array()) {
                        prop_assert!((x - y).abs() <= 1e-6 * y.abs().max(1.0));
                    }
                }
                (Label::Positive { .. }, None) => prop_assert!(false, "positive without target"),
                (_, t) => prop_assert!(t.is_none()),
            }
        }
    }

    #[test]
    fn stats_recount(
        props in prop::collection::vec(arb_box(), 0..30),
        gts in prop::collection::vec(arb_box(), 1..6),
        seed in any::<u64>(),
    ) {
        let jitter = JitterConfig { seed, ..JitterConfig::default() };
        let set = build_rcnn_training_set(&props, &gts, &MatchConfig::RCNN, &jitter, 300.0, 300.0).unwrap();
        prop_assert_eq!(set.candidates.len(), props.len() + set.num_jittered + gts.len());
        prop_assert_eq!(&set.candidates[..props.len()], &props[..]);
        let stats = positive_sample_stats(&set.candidates, &set.assignments, &gts);
        let pos: Vec<_> = set.positives().collect();
        prop_assert_eq!(stats.positives, pos.len());
        prop_assert_eq!(stats.positives + stats.negatives + stats.ignored, set.candidates.len());
        prop_assert_eq!(stats.iou_histogram.iter().sum::<usize>(), stats.positives);
        prop_assert_eq!(stats.positives_per_gt.iter().sum::<usize>(), stats.positives);
        let straddling = pos.iter().filter(|a| {
            let Label::Positive { gt } = a.label else { unreachable!() };
            let c = &set.candidates[a.candidate];
            (0..gts.len()).any(|g| g != gt && iou(c, &gts[g]) > STRADDLE_IOU)
        }).count();
        prop_assert_eq!(stats.straddling, straddling);
        for a in &pos {
            prop_assert!(a.max_iou >= 0.7);
        }
        // Every ground truth is its own candidate, so each has a positive.
        prop_assert!(stats.positives_per_gt.iter().all(|&n| n >= 1));
    }

    #[test]
    fn jitter_stays_in_bounds(gt in arb_box(), seed in any::<u64>(), a in 0.0..0.5f64) {
        let cfg = JitterConfig { count: 20, amplitude: a, seed };
        for (g, b) in jitter_indexed(&[gt], &cfg, 250.0, 250.0).unwrap() {
            prop_assert_eq!(g, 0);
            prop_assert!(b.x1() >= 0.0 && b.y1() >= 0.0 && b.x2() <= 250.0 && b.y2() <= 250.0);
            prop_assert!(b.width() > 0.0 && b.height() > 0.0);
            let tol = 1e-9;
            prop_assert!(b.x1() >= (gt.x1() - a * gt.width()).max(0.0) - tol);
            prop_assert!(b.x2() <= (gt.x2() + a * gt.width()).min(250.0) + tol);
            prop_assert!(b.y1() >= (gt.y1() - a * gt.height()).max(0.0) - tol);
            prop_assert!(b.y2() <= (gt.y2() + a * gt.height()).min(250.0) + tol);
        }
    }
}

/// Kolmogorov–Smirnov distance of a sample from Uniform(lo, hi).
fn ks_uniform(mut xs: Vec<f64>, lo: f64, hi: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[test]
fn jitter_offsets_are_uniform() {
    let gt = BBox::from_xywh(50.0, 50.0, 100.0, 200.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 20_000;
    let draws: Vec<[f64; 4]> = (0..n)
        .map(|_| sample_jitter_offsets(&gt, 0.2, &mut rng))
        .collect();
    // Asymptotic critical value at alpha = 0.01.
    let crit = 1.628 / (n as f64).sqrt();
    for (k, range) in [(0, 20.0), (1, 40.0), (2, 20.0), (3, 40.0)] {
        let d = ks_uniform(draws.iter().map(|o| o[k]).collect(), -range, range);
        assert!(d < crit, "offset {k}: D = {d}, critical {crit}");
    }
}

#[test]
fn zero_amplitude_copies() {
    let gts = [
        BBox::new(10.0, 20.0, 40.0, 100.0).unwrap(),
        BBox::new(0.0, 0.0, 5.0, 9.0).unwrap(),
    ];
    let cfg = JitterConfig {
        count: 7,
        amplitude: 0.0,
        seed: 3,
    };
    let out = jitter_indexed(&gts, &cfg, 200.0, 200.0).unwrap();
    assert_eq!(out.len(), 14);
    for (g, b) in out {
        assert_eq!(b, gts[g]);
    }
}

#[test]
fn strict_criterion_has_fewer_straddlers_on_crowds() {
    let detector = MockDetectorConfig {
        noise: 0.1,
        per_gt: 8,
        straddle_rate: 0.5,
        ..MockDetectorConfig::default()
    };
    let (mut strict, mut loose) = (0, 0);
    for seed in 0..20 {
        let scene = generate_scene(
            &SceneConfig {
                seed,
                ..SceneConfig::default()
            },
            "s",
        )
        .unwrap();
        let gts = scene.annotation.full_boxes();
        let props: Vec<BBox> = mock_detect(
            &scene.annotation,
            &MockDetectorConfig {
                seed,
                ..detector.clone()
            },
        )
        .unwrap()
        .into_iter()
        .map(|d| d.bbox)
        .collect();
        let jitter = JitterConfig {
            seed,
            ..JitterConfig::default()
        };
        let c = compare_criteria(
            &props,
            &gts,
            &MatchConfig::RCNN,
            &MatchConfig::RCNN_BASELINE,
            &jitter,
            640.0,
            480.0,
        )
        .unwrap();
        assert!(c.strict.positives <= c.baseline.positives);
        strict += c.strict.straddling;
        loose += c.baseline.straddling;
    }
    assert!(strict < loose, "strict {strict} vs baseline {loose}");
}
