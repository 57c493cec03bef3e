use serde::{Deserialize, Serialize};

use super::matching::match_detections;
use crate::annotation::{ClassId, Detection, GroundTruth};

/// `(C + 1) x (C + 1)` counts. Rows are ground-truth classes and columns are
/// predicted classes; index `C` is background in both.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        Self {
            num_classes,
            counts: vec![vec![0; num_classes + 1]; num_classes + 1],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn background(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, gt_row: usize, pred_col: usize) -> u64 {
        self.counts[gt_row][pred_col]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.counts
    }

    fn bump(&mut self, row: usize, col: usize) {
        self.counts[row][col] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_total(&self, row: usize) -> u64 {
        self.counts[row].iter().sum()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.num_classes, other.num_classes, "class count mismatch");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// Row-normalized copy; empty rows stay zero.
    pub fn normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let t: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| if t == 0 { 0.0 } else { c as f64 / t as f64 })
                    .collect()
            })
            .collect()
    }

    fn slot(&self, class: ClassId) -> usize {
        // classes beyond the configured range land in background
        class.index().min(self.num_classes)
    }
}

/// Confusion counts for one image.
///
/// Predictions under `conf_thresh` are dropped, the rest are matched
/// class-agnostically at `iou_thresh`.
pub fn confusion(
    preds: &[Detection],
    gts: &[GroundTruth],
    iou_thresh: f64,
    conf_thresh: f64,
    num_classes: usize,
) -> ConfusionMatrix {
    let kept: Vec<Detection> = preds.iter().filter(|d| d.confidence >= conf_thresh).copied().collect();
    let m = match_detections(&kept, gts, iou_thresh, false);
    let mut cm = ConfusionMatrix::new(num_classes);
    let bg = cm.background();
    for pm in &m.predictions {
        let col = cm.slot(kept[pm.prediction].class_id);
        match pm.gt {
            Some(gi) => {
                let row = cm.slot(gts[gi].class_id);
                cm.bump(row, col)
            }
            None => cm.bump(bg, col),
        }
    }
    for &gi in &m.unmatched_gts {
        let row = cm.slot(gts[gi].class_id);
        cm.bump(row, bg);
    }
    cm
}

/// Row-normalized diagonal for `class`; `None` when the row is empty.
pub fn class_accuracy(cm: &ConfusionMatrix, class: ClassId) -> Option<f64> {
    let row = class.index();
    if row >= cm.num_classes {
        return None;
    }
    let total = cm.row_total(row);
    (total > 0).then(|| cm.get(row, row) as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundingBox;

    fn bb(x: f64) -> BoundingBox {
        BoundingBox::new(x, 0.0, x + 10.0, 10.0).unwrap()
    }

    #[test]
    fn perfect_detections_are_diagonal() {
        let gts = [GroundTruth::new(ClassId(0), bb(0.0)), GroundTruth::new(ClassId(1), bb(20.0))];
        let preds: Vec<Detection> = gts
            .iter()
            .map(|g| Detection::new(g.class_id, g.bbox, 0.9).unwrap())
            .collect();
        let cm = confusion(&preds, &gts, 0.5, 0.25, 2);
        assert_eq!(cm.rows(), &[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 0]]);
    }

    #[test]
    fn pallet_detected_as_hole_is_off_diagonal() {
        let gts = [GroundTruth::new(ClassId::PALLET, bb(0.0))];
        let preds = [Detection::new(ClassId::HOLE, bb(0.0), 0.9).unwrap()];
        let cm = confusion(&preds, &gts, 0.5, 0.25, 2);
        assert_eq!(cm.get(0, 1), 1);
        assert_eq!(cm.total(), 1);
    }

    #[test]
    fn spurious_prediction_is_background_row() {
        let preds = [Detection::new(ClassId::HOLE, bb(0.0), 0.9).unwrap()];
        let cm = confusion(&preds, &[], 0.5, 0.25, 2);
        assert_eq!(cm.get(2, 1), 1);
    }

    #[test]
    fn low_confidence_dropped() {
        let gts = [GroundTruth::new(ClassId(0), bb(0.0))];
        let preds = [Detection::new(ClassId(0), bb(0.0), 0.1).unwrap()];
        let cm = confusion(&preds, &gts, 0.5, 0.25, 2);
        assert_eq!(cm.get(0, 2), 1);
        assert_eq!(cm.total(), 1);
    }

    #[test]
    fn accuracy_examples() {
        let mut cm = ConfusionMatrix::new(2);
        for _ in 0..19 {
            cm.bump(0, 0);
        }
        cm.bump(0, 2);
        assert_eq!(class_accuracy(&cm, ClassId(0)), Some(0.95));
        assert_eq!(class_accuracy(&cm, ClassId(1)), None);
        cm.bump(1, 2);
        assert_eq!(class_accuracy(&cm, ClassId(1)), Some(0.0));
        let mut diag = ConfusionMatrix::new(2);
        diag.bump(0, 0);
        diag.bump(1, 1);
        assert_eq!(class_accuracy(&diag, ClassId(0)), Some(1.0));
        assert_eq!(class_accuracy(&diag, ClassId(1)), Some(1.0));
    }

    #[test]
    fn merge_adds() {
        let mut a = ConfusionMatrix::new(1);
        a.bump(0, 0);
        let mut b = ConfusionMatrix::new(1);
        b.bump(1, 0);
        a.merge(&b);
        assert_eq!(a.total(), 2);
        assert_eq!(a.normalized()[0], vec![1.0, 0.0]);
    }
}
