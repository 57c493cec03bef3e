//! Axis-aligned boxes in continuous pixel coordinates.
//!
//! Origin is the top-left corner, x grows rightward and y downward. Areas are
//! plain `width * height` with no "+1 pixel" convention, so a box is a closed
//! set in the plane and IoU is a ratio of set measures.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("box corner is not finite: ({x1}, {y1}, {x2}, {y2})")]
    NonFinite { x1: f64, y1: f64, x2: f64, y2: f64 },
    #[error("box has non-positive extent: ({x1}, {y1}, {x2}, {y2})")]
    Degenerate { x1: f64, y1: f64, x2: f64, y2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// A box with `x1 < x2` and `y1 < y2`, checked at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundingBox {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

impl BoundingBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, GeometryError> {
        if !(x1.is_finite() && y1.is_finite() && x2.is_finite() && y2.is_finite()) {
            return Err(GeometryError::NonFinite { x1, y1, x2, y2 });
        }
        if !(x1 < x2 && y1 < y2) {
            return Err(GeometryError::Degenerate { x1, y1, x2, y2 });
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    /// Builds a box from its center and size.
    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        Self::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
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

    /// Corners as `[x1, y1, x2, y2]`.
    pub fn corners(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
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

    pub fn diagonal_sq(&self) -> f64 {
        self.width().powi(2) + self.height().powi(2)
    }

    pub fn centroid(&self) -> Point {
        Point::new((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    /// Boundary-inclusive point test.
    pub fn contains(&self, p: &Point) -> bool {
        self.x1 <= p.x && p.x <= self.x2 && self.y1 <= p.y && p.y <= self.y2
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let iw = self.x2.min(other.x2) - self.x1.max(other.x1);
        let ih = self.y2.min(other.y2) - self.y1.max(other.y1);
        if iw <= 0.0 || ih <= 0.0 {
            0.0
        } else {
            iw * ih
        }
    }

    /// Overlap of the two boxes, if they share positive area.
    pub fn intersection(&self, other: &BoundingBox) -> Option<BoundingBox> {
        BoundingBox::new(
            self.x1.max(other.x1),
            self.y1.max(other.y1),
            self.x2.min(other.x2),
            self.y2.min(other.y2),
        )
        .ok()
    }

    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection_area(other);
        if inter == 0.0 {
            return 0.0;
        }
        let union = self.area() + other.area() - inter;
        (inter / union).clamp(0.0, 1.0)
    }

    /// Smallest axis-aligned box covering both.
    pub fn enclosing(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            x1: self.x1.min(other.x1),
            y1: self.y1.min(other.y1),
            x2: self.x2.max(other.x2),
            y2: self.y2.max(other.y2),
        }
    }

    pub fn enclosing_diagonal_sq(&self, other: &BoundingBox) -> f64 {
        self.enclosing(other).diagonal_sq()
    }

    pub fn center_distance_sq(&self, other: &BoundingBox) -> f64 {
        self.centroid().distance_sq(&other.centroid())
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Result<BoundingBox, GeometryError> {
        BoundingBox::new(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)
    }

    /// Scales all corners about the origin.
    pub fn scale(&self, factor: f64) -> Result<BoundingBox, GeometryError> {
        BoundingBox::new(
            self.x1 * factor,
            self.y1 * factor,
            self.x2 * factor,
            self.y2 * factor,
        )
    }

    /// Clips to `[0, width] x [0, height]`; `None` if nothing is left.
    pub fn clip(&self, width: f64, height: f64) -> Option<BoundingBox> {
        BoundingBox::new(
            self.x1.max(0.0),
            self.y1.max(0.0),
            self.x2.min(width),
            self.y2.min(height),
        )
        .ok()
    }
}

impl<'de> Deserialize<'de> for BoundingBox {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            x1: f64,
            y1: f64,
            x2: f64,
            y2: f64,
        }
        let raw = Raw::deserialize(deserializer)?;
        BoundingBox::new(raw.x1, raw.y1, raw.x2, raw.y2).map_err(serde::de::Error::custom)
    }
}

pub fn centroid(b: &BoundingBox) -> Point {
    b.centroid()
}

pub fn contains(outer: &BoundingBox, p: &Point) -> bool {
    outer.contains(p)
}

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    a.iou(b)
}

pub fn enclosing_diagonal_sq(a: &BoundingBox, b: &BoundingBox) -> f64 {
    a.enclosing_diagonal_sq(b)
}

pub fn center_distance_sq(a: &BoundingBox, b: &BoundingBox) -> f64 {
    a.center_distance_sq(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bb(x1: f64, y1: f64, x2: f64, y2: f64) -> BoundingBox {
        BoundingBox::new(x1, y1, x2, y2).unwrap()
    }

    #[test]
    fn rejects_degenerate_and_non_finite() {
        assert!(matches!(
            BoundingBox::new(0.0, 0.0, 0.0, 1.0),
            Err(GeometryError::Degenerate { .. })
        ));
        assert!(matches!(
            BoundingBox::new(0.0, 2.0, 1.0, 1.0),
            Err(GeometryError::Degenerate { .. })
        ));
        assert!(matches!(
            BoundingBox::new(f64::NAN, 0.0, 1.0, 1.0),
            Err(GeometryError::NonFinite { .. })
        ));
    }

    #[test]
    fn centroid_examples() {
        assert_eq!(centroid(&bb(0.0, 0.0, 2.0, 2.0)), Point::new(1.0, 1.0));
        assert_eq!(centroid(&bb(10.0, 30.0, 30.0, 50.0)), Point::new(20.0, 40.0));
        assert_eq!(centroid(&bb(0.0, 0.0, 640.0, 480.0)), Point::new(320.0, 240.0));
    }

    #[test]
    fn contains_is_boundary_inclusive() {
        let outer = bb(0.0, 0.0, 100.0, 60.0);
        assert!(contains(&outer, &Point::new(20.0, 40.0)));
        assert!(contains(&outer, &Point::new(100.0, 60.0)));
        assert!(contains(&outer, &Point::new(0.0, 0.0)));
        assert!(!contains(&outer, &Point::new(101.0, 40.0)));
    }

    #[test]
    fn iou_examples() {
        let a = bb(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&bb(0.0, 0.0, 1.0, 1.0), &bb(5.0, 5.0, 6.0, 6.0)), 0.0);
        assert_eq!(iou(&bb(0.0, 0.0, 2.0, 2.0), &bb(1.0, 0.0, 3.0, 2.0)), 1.0 / 3.0);
        // edge-touching boxes share no area
        assert_eq!(iou(&bb(0.0, 0.0, 1.0, 1.0), &bb(1.0, 0.0, 2.0, 1.0)), 0.0);
    }

    #[test]
    fn enclosing_diagonal_examples() {
        let a = bb(0.0, 0.0, 3.0, 4.0);
        assert_eq!(enclosing_diagonal_sq(&a, &a), 25.0);
        assert_eq!(
            enclosing_diagonal_sq(&bb(0.0, 0.0, 1.0, 1.0), &bb(2.0, 2.0, 3.0, 3.0)),
            18.0
        );
        let outer = bb(-5.0, -5.0, 5.0, 7.0);
        let inner = bb(0.0, 0.0, 1.0, 1.0);
        assert_eq!(enclosing_diagonal_sq(&inner, &outer), outer.diagonal_sq());
    }

    #[test]
    fn center_distance_examples() {
        let a = bb(-1.0, -1.0, 1.0, 1.0);
        assert_eq!(center_distance_sq(&a, &a), 0.0);
        let b = bb(2.0, 3.0, 4.0, 5.0);
        assert_eq!(center_distance_sq(&a, &b), 25.0);
    }

    #[test]
    fn clip_and_intersection() {
        let b = bb(-10.0, 5.0, 50.0, 120.0);
        assert_eq!(b.clip(40.0, 100.0), Some(bb(0.0, 5.0, 40.0, 100.0)));
        assert_eq!(bb(50.0, 0.0, 60.0, 10.0).clip(40.0, 100.0), None);
        assert_eq!(
            bb(0.0, 0.0, 2.0, 2.0).intersection(&bb(1.0, 1.0, 3.0, 3.0)),
            Some(bb(1.0, 1.0, 2.0, 2.0))
        );
    }

    #[test]
    fn deserialize_validates() {
        let ok: BoundingBox = serde_json::from_str(r#"{"x1":0,"y1":0,"x2":1,"y2":2}"#).unwrap();
        assert_eq!(ok, bb(0.0, 0.0, 1.0, 2.0));
        assert!(serde_json::from_str::<BoundingBox>(r#"{"x1":1,"y1":0,"x2":1,"y2":2}"#).is_err());
    }

    fn arb_box() -> impl Strategy<Value = BoundingBox> {
        (-100.0..100.0f64, -100.0..100.0f64, 0.01..80.0f64, 0.01..80.0f64)
            .prop_map(|(x, y, w, h)| bb(x, y, x + w, y + h))
    }

    fn arb_dyadic_box() -> impl Strategy<Value = BoundingBox> {
        (-400i32..400, -400i32..400, 1i32..200, 1i32..200).prop_map(|(x, y, w, h)| {
            let (x, y) = (x as f64 / 8.0, y as f64 / 8.0);
            bb(x, y, x + w as f64 / 8.0, y + h as f64 / 8.0)
        })
    }

    proptest! {
        #[test]
        fn iou_is_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let ab = iou(&a, &b);
            prop_assert_eq!(ab, iou(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
        }

        #[test]
        fn iou_one_only_for_identical(a in arb_box(), b in arb_box()) {
            prop_assert_eq!(iou(&a, &b) == 1.0, a == b);
            prop_assert_eq!(iou(&a, &a), 1.0);
        }

        #[test]
        fn enclosing_diagonal_dominates(a in arb_box(), b in arb_box()) {
            let c2 = enclosing_diagonal_sq(&a, &b);
            prop_assert!(c2 >= a.diagonal_sq().max(b.diagonal_sq()));
        }

        #[test]
        fn center_distance_symmetric(a in arb_box(), b in arb_box()) {
            prop_assert_eq!(center_distance_sq(&a, &b), center_distance_sq(&b, &a));
        }

        #[test]
        fn containment_translation_equivariant(
            outer in arb_dyadic_box(),
            inner in arb_dyadic_box(),
            dx in -512i32..512,
            dy in -512i32..512,
        ) {
            // dyadic corners and shifts keep every sum exact
            let (dx, dy) = (dx as f64 / 8.0, dy as f64 / 8.0);
            let before = contains(&outer, &centroid(&inner));
            let o = outer.translate(dx, dy).unwrap();
            let i = inner.translate(dx, dy).unwrap();
            prop_assert_eq!(before, contains(&o, &centroid(&i)));
        }
    }
}
