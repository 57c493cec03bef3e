//! Dataset annotations, prediction files and the raw grid-tensor layout.
//!
//! Label files use the five-field YOLO text convention `class cx cy w h`
//! with coordinates normalized to the image size; prediction files append a
//! sixth `conf` field. Normalized coordinates are held on a 2^-32 lattice
//! (see [`NormalizedAnnotation`]) so reflections and other affine edits of
//! annotations are exact.

mod grid;
mod labels;
mod manifest;

pub use grid::{decode_grid, format_grid, parse_grid, GridPrediction};
pub use labels::{
    format_label_line, format_labels, format_prediction_line, format_predictions,
    parse_label_annotations, parse_labels, parse_predictions,
};
pub use manifest::{
    split_counts, split_manifest, DatasetManifest, ImageEntry, Split, SplitFractions, UnsplitEntry,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BoundingBox, GeometryError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnnotationError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },
    #[error("grid block has {found} values, expected {expected}")]
    Shape { expected: usize, found: usize },
    #[error("invalid value: {0}")]
    Invalid(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Object class index. Class 0 is a pallet, class 1 a pallet hole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u32);

impl ClassId {
    pub const PALLET: ClassId = ClassId(0);
    pub const HOLE: ClassId = ClassId(1);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for ClassId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Class count used throughout: pallet and pallet hole.
pub const DEFAULT_NUM_CLASSES: usize = 2;

pub const DEFAULT_CLASS_NAMES: [&str; 2] = ["pallet", "pallet-hole"];

const LATTICE: f64 = 4_294_967_296.0; // 2^32

/// Rounds a unit-interval coordinate to the nearest multiple of 2^-32.
///
/// Every lattice point in `[0, 1]` has an exactly representable mirror
/// image `1 - v`.
pub fn snap_to_lattice(v: f64) -> f64 {
    (v * LATTICE).round() / LATTICE
}

/// One YOLO-format label: class plus normalized center and size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedAnnotation {
    pub class_id: ClassId,
    cx: f64,
    cy: f64,
    w: f64,
    h: f64,
}

impl NormalizedAnnotation {
    pub fn new(class_id: ClassId, cx: f64, cy: f64, w: f64, h: f64) -> Result<Self, AnnotationError> {
        for (name, v) in [("cx", cx), ("cy", cy), ("w", w), ("h", h)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(AnnotationError::Invalid(format!("{name}={v} is outside [0, 1]")));
            }
        }
        let (cx, cy, w, h) = (
            snap_to_lattice(cx),
            snap_to_lattice(cy),
            snap_to_lattice(w),
            snap_to_lattice(h),
        );
        if w <= 0.0 || h <= 0.0 {
            return Err(AnnotationError::Invalid(format!("non-positive size w={w} h={h}")));
        }
        Ok(Self { class_id, cx, cy, w, h })
    }

    /// Normalizes a pixel box, clipping it to the image first.
    pub fn from_pixel_box(
        class_id: ClassId,
        bbox: &BoundingBox,
        img_w: f64,
        img_h: f64,
    ) -> Result<Self, AnnotationError> {
        let clipped = bbox.clip(img_w, img_h).ok_or_else(|| {
            AnnotationError::Invalid(format!("box {:?} lies outside the {img_w}x{img_h} image", bbox.corners()))
        })?;
        let x1 = clipped.x1() / img_w;
        let x2 = clipped.x2() / img_w;
        let y1 = clipped.y1() / img_h;
        let y2 = clipped.y2() / img_h;
        Self::new(
            class_id,
            ((x1 + x2) / 2.0).clamp(0.0, 1.0),
            ((y1 + y2) / 2.0).clamp(0.0, 1.0),
            (x2 - x1).min(1.0),
            (y2 - y1).min(1.0),
        )
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }

    pub fn cy(&self) -> f64 {
        self.cy
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Normalized corners `(x1, y1, x2, y2)` clipped to the unit square.
    pub fn normalized_corners(&self) -> [f64; 4] {
        [
            (self.cx - self.w / 2.0).max(0.0),
            (self.cy - self.h / 2.0).max(0.0),
            (self.cx + self.w / 2.0).min(1.0),
            (self.cy + self.h / 2.0).min(1.0),
        ]
    }

    /// Denormalizes to a pixel box clipped to the image.
    pub fn to_pixel_box(&self, img_w: f64, img_h: f64) -> Result<BoundingBox, AnnotationError> {
        let [x1, y1, x2, y2] = self.normalized_corners();
        Ok(BoundingBox::new(x1 * img_w, y1 * img_h, x2 * img_w, y2 * img_h)?)
    }

    /// Same annotation with new geometry, keeping the class.
    pub fn with_geometry(&self, cx: f64, cy: f64, w: f64, h: f64) -> Result<Self, AnnotationError> {
        Self::new(self.class_id, cx, cy, w, h)
    }
}

/// A predicted box with its confidence (objectness times class probability).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class_id: ClassId,
    pub bbox: BoundingBox,
    pub confidence: f64,
}

impl Detection {
    pub fn new(class_id: ClassId, bbox: BoundingBox, confidence: f64) -> Result<Self, AnnotationError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(AnnotationError::Invalid(format!(
                "confidence {confidence} is outside [0, 1]"
            )));
        }
        Ok(Self {
            class_id,
            bbox,
            confidence,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub class_id: ClassId,
    pub bbox: BoundingBox,
}

impl GroundTruth {
    pub fn new(class_id: ClassId, bbox: BoundingBox) -> Self {
        Self { class_id, bbox }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_reflection_is_exact() {
        for v in [0.3, 0.1, 1e-12, 0.333_333_333, 0.999_999_9, 0.25] {
            let q = snap_to_lattice(v);
            assert!((q - v).abs() <= 0.5 / LATTICE);
            assert_eq!(1.0 - (1.0 - q), q);
        }
    }

    #[test]
    fn normalized_rejects_out_of_range() {
        assert!(NormalizedAnnotation::new(ClassId(0), 1.2, 0.5, 0.1, 0.1).is_err());
        assert!(NormalizedAnnotation::new(ClassId(0), 0.5, 0.5, 0.0, 0.1).is_err());
        assert!(NormalizedAnnotation::new(ClassId(0), 0.5, 0.5, 1e-12, 0.1).is_err());
    }

    #[test]
    fn pixel_round_trip_for_in_range_box() {
        let b = BoundingBox::new(12.5, 40.0, 96.0, 150.25).unwrap();
        let ann = NormalizedAnnotation::from_pixel_box(ClassId::HOLE, &b, 640.0, 480.0).unwrap();
        let back = ann.to_pixel_box(640.0, 480.0).unwrap();
        for (a, b) in back.corners().iter().zip(b.corners()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn detection_confidence_checked() {
        let b = BoundingBox::new(0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(Detection::new(ClassId(0), b, 1.5).is_err());
        assert!(Detection::new(ClassId(0), b, 1.0).is_ok());
    }
}
