//! 101-point interpolated average precision and its means.
//!
//! The interpolated precision at recall level `r` is the highest precision
//! reached at any rank whose recall is at least `r`, or 0 when no rank gets
//! there. AP averages it over `r = 0.00, 0.01, ..., 1.00`.

use super::ranking::{ranked_predictions, Ranked};
use super::EvalImage;
use crate::annotation::ClassId;

pub const RECALL_POINTS: usize = 101;

/// AP of a ranked TP/FP list against `n_gt` ground truths; `None` when `n_gt == 0`.
pub fn ap_from_ranked(ranked: &[Ranked], n_gt: usize) -> Option<f64> {
    if n_gt == 0 {
        return None;
    }
    let mut tp = 0usize;
    let mut precision = Vec::with_capacity(ranked.len());
    let mut tp_at = Vec::with_capacity(ranked.len());
    for (i, r) in ranked.iter().enumerate() {
        tp += r.true_positive as usize;
        precision.push(tp as f64 / (i + 1) as f64);
        tp_at.push(tp);
    }
    // suffix maximum: best precision at this rank or any later one
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let mut sum = 0.0;
    let mut rank = 0usize;
    for k in 0..RECALL_POINTS {
        // first rank with recall >= k / 100, compared in integers
        while rank < tp_at.len() && tp_at[rank] * 100 < k * n_gt {
            rank += 1;
        }
        if rank < tp_at.len() {
            sum += precision[rank];
        }
    }
    Some(sum / RECALL_POINTS as f64)
}

/// AP of `class` at `iou_thresh`; `None` when the class has no ground truth.
pub fn average_precision(images: &[EvalImage], iou_thresh: f64, class: ClassId) -> Option<f64> {
    let (ranked, n_gt) = ranked_predictions(images, iou_thresh, class);
    ap_from_ranked(&ranked, n_gt)
}

/// Mean AP over classes that have ground truth; `None` if none do.
pub fn mean_average_precision(images: &[EvalImage], iou_thresh: f64, num_classes: usize) -> Option<f64> {
    let aps: Vec<f64> = (0..num_classes)
        .filter_map(|c| average_precision(images, iou_thresh, ClassId(c as u32)))
        .collect();
    (!aps.is_empty()).then(|| aps.iter().sum::<f64>() / aps.len() as f64)
}

/// `0.50, 0.55, ..., 0.95`.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

/// Mean over `thresholds` of the class-mean AP.
///
/// Thresholds where no class has ground truth contribute 0.
pub fn map_range(images: &[EvalImage], thresholds: &[f64], num_classes: usize) -> f64 {
    if thresholds.is_empty() {
        return 0.0;
    }
    thresholds
        .iter()
        .map(|&t| mean_average_precision(images, t, num_classes).unwrap_or(0.0))
        .sum::<f64>()
        / thresholds.len() as f64
}
