//! Per-class ranked true/false-positive lists, the input to PR curves and AP.

use super::matching::match_detections;
use super::EvalImage;
use crate::annotation::{ClassId, Detection, GroundTruth};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ranked {
    pub confidence: f64,
    pub true_positive: bool,
}

/// Every prediction of `class` across `images`, flagged TP/FP by greedy
/// matching at `iou_thresh`, sorted by descending confidence.
///
/// Equal confidences keep (image, prediction) order, so the result does not
/// depend on how images were batched. Also returns the ground-truth count.
pub fn ranked_predictions(images: &[EvalImage], iou_thresh: f64, class: ClassId) -> (Vec<Ranked>, usize) {
    let mut ranked = Vec::new();
    let mut n_gt = 0;
    for img in images {
        let preds: Vec<Detection> = img.detections.iter().filter(|d| d.class_id == class).copied().collect();
        let gts: Vec<GroundTruth> = img.ground_truths.iter().filter(|g| g.class_id == class).copied().collect();
        n_gt += gts.len();
        let m = match_detections(&preds, &gts, iou_thresh, true);
        ranked.extend(m.predictions.iter().map(|pm| Ranked {
            confidence: preds[pm.prediction].confidence,
            true_positive: pm.gt.is_some(),
        }));
    }
    ranked.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    (ranked, n_gt)
}
