use crowdped_core::geometry::{BBox, BoxDeltas};
use crowdped_core::mask::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn arb_box() -> impl Strategy<Value = BBox> {
    (-20.0..120.0f64, -20.0..120.0f64, 0.5..80.0f64, 0.5..80.0f64)
        .prop_map(|(x, y, w, h)| BBox::from_xywh(x, y, w, h).unwrap())
}

// Direct cell-by-cell test, without going through BBox::intersection.
fn brute_mask(p: &BBox, h: &BBox, m: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let x = p.x1() + (j as f64 + 0.5) * p.width() / m as f64;
            let y = p.y1() + (i as f64 + 0.5) * p.height() / m as f64;
            let inside = |b: &BBox| b.x1() <= x && x <= b.x2() && b.y1() <= y && y <= b.y2();
            out.push(u8::from(inside(h) && inside(p)));
        }
    }
    out
}

proptest! {
    #[test]
    fn rasterization_matches_brute_force(p in arb_box(), h in arb_box(), m in 1usize..40) {
        let mask = rasterize_head_mask(&p, Some(&h), m).unwrap();
        prop_assert_eq!(mask.cells(), &brute_mask(&p, &h, m)[..]);
    }

    #[test]
    fn total_loss_is_linear(
        cls in 0.0..10.0f64, bbox in 0.0..10.0f64, mask in 0.0..10.0f64,
        l1 in 0.0..5.0f64, l2 in 0.0..5.0f64,
    ) {
        let out = total_loss(cls, bbox, mask, &LossConfig { box_weight: l1, mask_weight: l2 }).unwrap();
        prop_assert_eq!(out.total, cls + l1 * bbox + l2 * mask);
        let zero = total_loss(cls, bbox, mask, &LossConfig { box_weight: 0.0, mask_weight: 0.0 }).unwrap();
        prop_assert_eq!(zero.total, cls);
    }

    #[test]
    fn box_loss_symmetric_and_zero_on_match(a in prop::array::uniform4(-3.0..3.0f64), b in prop::array::uniform4(-3.0..3.0f64)) {
        let d = |v: [f64; 4]| BoxDeltas { dx: v[0], dy: v[1], dw: v[2], dh: v[3] };
        prop_assert_eq!(box_loss(&d(a), &d(b)).unwrap(), box_loss(&d(b), &d(a)).unwrap());
        prop_assert_eq!(box_loss(&d(a), &d(a)).unwrap(), 0.0);
    }
}

#[test]
fn bce_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let side = 8;
    let h = 1e-6;
    for _ in 0..30 {
        let p = BBox::from_xywh(0.0, 0.0, 40.0, 100.0).unwrap();
        let head = BBox::from_xywh(
            rng.random_range(0.0..30.0),
            rng.random_range(0.0..40.0),
            12.0,
            20.0,
        )
        .unwrap();
        let target = rasterize_head_mask(&p, Some(&head), side).unwrap();
        let pred: Vec<f64> = (0..side * side)
            .map(|_| rng.random_range(0.05..0.95))
            .collect();
        let grad = bce_grad(&pred, &target).unwrap();
        for k in 0..pred.len() {
            let (mut up, mut dn) = (pred.clone(), pred.clone());
            up[k] += h;
            dn[k] -= h;
            let fd =
                (bce_loss(&up, &target).unwrap() - bce_loss(&dn, &target).unwrap()) / (2.0 * h);
            assert!(
                (fd - grad[k]).abs() <= 1e-4 * grad[k].abs().max(1e-3),
                "cell {k}: {fd} vs {}",
                grad[k]
            );
        }
    }
}

#[test]
fn half_prediction_gives_ln2() {
    let p = BBox::new(0.0, 0.0, 10.0, 20.0).unwrap();
    for head in [None, Some(BBox::new(2.0, 0.0, 8.0, 5.0).unwrap())] {
        let t = rasterize_head_mask(&p, head.as_ref(), DEFAULT_MASK_SIZE).unwrap();
        let v = bce_loss(&vec![0.5; DEFAULT_MASK_SIZE * DEFAULT_MASK_SIZE], &t).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-12);
    }
}

#[test]
fn clamped_extremes_stay_finite() {
    let p = BBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
    let t = rasterize_head_mask(&p, Some(&p), 2).unwrap();
    assert_eq!(t.count_ones(), 4);
    let v = bce_loss(&[0.0; 4], &t).unwrap();
    assert!((v + 1e-7f64.ln()).abs() < 1e-9);
    assert!(bce_grad(&[0.0; 4], &t).unwrap().iter().all(|g| *g == 0.0));
    assert!(bce_loss(&[0.0; 3], &t).is_err());
    assert!(bce_loss(&[1.5; 4], &t).is_err());
}
