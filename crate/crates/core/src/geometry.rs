//! Axis-aligned boxes in continuous pixel coordinates.
//!
//! No `+1` pixel convention: a box `[x1, y1, x2, y2]` has width `x2 - x1`.
//! Zero-area boxes are valid values; inverted or non-finite boxes are not.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Axis-aligned box, origin at the top-left image corner.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(try_from = "[f64; 4]", into = "[f64; 4]")
)]
pub struct BBox {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        let finite = x1.is_finite() && y1.is_finite() && x2.is_finite() && y2.is_finite();
        if !finite || x2 < x1 || y2 < y1 {
            return Err(Error::InvalidBox { x1, y1, x2, y2 });
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    /// Box of the given size with its top-left corner at `(x, y)`.
    pub fn from_xywh(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        Self::new(x, y, x + w, y + h)
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        Self::new(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h)
    }

    #[inline]
    pub fn x1(&self) -> f64 {
        self.x1
    }
    #[inline]
    pub fn y1(&self) -> f64 {
        self.y1
    }
    #[inline]
    pub fn x2(&self) -> f64 {
        self.x2
    }
    #[inline]
    pub fn y2(&self) -> f64 {
        self.y2
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }
    #[inline]
    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }
    #[inline]
    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x1 + self.x2), 0.5 * (self.y1 + self.y2))
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    /// True when `(x, y)` lies in the closed box.
    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= self.x1 && x <= self.x2 && y >= self.y1 && y <= self.y2
    }

    /// Overlap of the two boxes, `None` when they do not intersect.
    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let x1 = self.x1.max(other.x1);
        let y1 = self.y1.max(other.y1);
        let x2 = self.x2.min(other.x2);
        let y2 = self.y2.min(other.y2);
        (x2 >= x1 && y2 >= y1).then_some(BBox { x1, y1, x2, y2 })
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &BBox) -> BBox {
        BBox {
            x1: self.x1.min(other.x1),
            y1: self.y1.min(other.y1),
            x2: self.x2.max(other.x2),
            y2: self.y2.max(other.y2),
        }
    }

    /// Clamps every coordinate into `[0, width] x [0, height]`.
    pub fn clip(&self, width: f64, height: f64) -> BBox {
        clip(self, width, height)
    }

    /// Clamps this box into `bounds`. The result may be zero-area if the boxes
    /// are disjoint.
    pub fn clamp_to(&self, bounds: &BBox) -> BBox {
        let cx = |v: f64| v.clamp(bounds.x1, bounds.x2);
        let cy = |v: f64| v.clamp(bounds.y1, bounds.y2);
        BBox {
            x1: cx(self.x1),
            y1: cy(self.y1),
            x2: cx(self.x2),
            y2: cy(self.y2),
        }
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        b.to_array()
    }
}

#[inline]
fn intersection_area(a: &BBox, b: &BBox) -> f64 {
    let w = a.x2.min(b.x2) - a.x1.max(b.x1);
    let h = a.y2.min(b.y2) - a.y1.max(b.y1);
    if w <= 0.0 || h <= 0.0 {
        0.0
    } else {
        w * h
    }
}

// Shared by the scalar and batched paths so both produce identical bits.
#[inline]
fn iou_with_areas(a: &BBox, area_a: f64, b: &BBox, area_b: f64) -> f64 {
    let inter = intersection_area(a, b);
    let union = area_a + area_b - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

#[inline]
fn ioa_with_area(a: &BBox, area_a: f64, b: &BBox) -> f64 {
    if area_a <= 0.0 {
        0.0
    } else {
        intersection_area(a, b) / area_a
    }
}

/// Intersection over union; 0 when the union is empty.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    iou_with_areas(a, a.area(), b, b.area())
}

/// Intersection over the area of `a`; 0 when `a` has zero area.
pub fn ioa(a: &BBox, b: &BBox) -> f64 {
    ioa_with_area(a, a.area(), b)
}

pub fn clip(b: &BBox, width: f64, height: f64) -> BBox {
    BBox {
        x1: b.x1.clamp(0.0, width),
        y1: b.y1.clamp(0.0, height),
        x2: b.x2.clamp(0.0, width),
        y2: b.y2.clamp(0.0, height),
    }
}

/// Dense row-major matrix of pairwise box overlaps.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl OverlapMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

fn areas(boxes: &[BBox]) -> Vec<f64> {
    boxes.iter().map(BBox::area).collect()
}

/// `iou(a[i], b[j])` for every pair, with areas computed once per box.
pub fn iou_matrix(a: &[BBox], b: &[BBox]) -> OverlapMatrix {
    let area_a = areas(a);
    let area_b = areas(b);
    let mut data = Vec::with_capacity(a.len() * b.len());
    for (ba, &aa) in a.iter().zip(&area_a) {
        data.extend(
            b.iter()
                .zip(&area_b)
                .map(|(bb, &ab)| iou_with_areas(ba, aa, bb, ab)),
        );
    }
    OverlapMatrix {
        rows: a.len(),
        cols: b.len(),
        data,
    }
}

/// `ioa(a[i], b[j])` for every pair.
pub fn ioa_matrix(a: &[BBox], b: &[BBox]) -> OverlapMatrix {
    let mut data = Vec::with_capacity(a.len() * b.len());
    for ba in a {
        let aa = ba.area();
        data.extend(b.iter().map(|bb| ioa_with_area(ba, aa, bb)));
    }
    OverlapMatrix {
        rows: a.len(),
        cols: b.len(),
        data,
    }
}

/// Regression target relative to a reference box: center offsets scaled by the
/// reference size and log size ratios.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoxDeltas {
    pub dx: f64,
    pub dy: f64,
    pub dw: f64,
    pub dh: f64,
}

impl BoxDeltas {
    pub fn to_array(&self) -> [f64; 4] {
        [self.dx, self.dy, self.dw, self.dh]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

fn require_positive(b: &BBox) -> Result<()> {
    if b.width() > 0.0 && b.height() > 0.0 {
        Ok(())
    } else {
        Err(Error::DegenerateBox)
    }
}

/// Deltas mapping `anchor` onto `gt`. Both boxes need positive extents.
pub fn encode_deltas(anchor: &BBox, gt: &BBox) -> Result<BoxDeltas> {
    require_positive(anchor)?;
    require_positive(gt)?;
    let (aw, ah) = (anchor.width(), anchor.height());
    let (acx, acy) = anchor.center();
    let (gcx, gcy) = gt.center();
    Ok(BoxDeltas {
        dx: (gcx - acx) / aw,
        dy: (gcy - acy) / ah,
        dw: libm::log(gt.width() / aw),
        dh: libm::log(gt.height() / ah),
    })
}

/// Inverse of [`encode_deltas`].
pub fn decode_deltas(anchor: &BBox, deltas: &BoxDeltas) -> Result<BBox> {
    require_positive(anchor)?;
    if !deltas.is_finite() {
        return Err(Error::NonFinite);
    }
    let (aw, ah) = (anchor.width(), anchor.height());
    let (acx, acy) = anchor.center();
    let cx = acx + deltas.dx * aw;
    let cy = acy + deltas.dy * ah;
    let w = aw * libm::exp(deltas.dw);
    let h = ah * libm::exp(deltas.dh);
    BBox::from_center(cx, cy, w, h)
}
