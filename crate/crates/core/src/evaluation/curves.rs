use serde::{Deserialize, Serialize};

use super::ranking::{ranked_predictions, Ranked};
use super::EvalImage;
use crate::annotation::ClassId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub conf: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Curve {
    pub class_id: ClassId,
    pub points: Vec<CurvePoint>,
    /// Highest-F1 point; the lowest threshold wins ties.
    pub best: CurvePoint,
}

/// `2PR / (P + R)`, zero when both are zero.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// `0.00, 0.01, ..., 1.00`.
pub fn default_conf_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

pub(crate) fn point_at(ranked: &[Ranked], n_gt: usize, conf: f64) -> CurvePoint {
    let (tp, kept) = ranked
        .iter()
        .take_while(|r| r.confidence >= conf)
        .fold((0usize, 0usize), |(tp, n), r| (tp + r.true_positive as usize, n + 1));
    let precision = if kept == 0 { 0.0 } else { tp as f64 / kept as f64 };
    let recall = if n_gt == 0 { 0.0 } else { tp as f64 / n_gt as f64 };
    CurvePoint {
        conf,
        precision,
        recall,
        f1: f1_score(precision, recall),
    }
}

/// Precision, recall and F1 of `class` at each threshold in `conf_grid`.
///
/// A threshold keeps predictions with confidence `>=` it. With nothing kept,
/// precision is reported as 0.
pub fn pr_f1_curve(images: &[EvalImage], iou_thresh: f64, class: ClassId, conf_grid: &[f64]) -> F1Curve {
    let (ranked, n_gt) = ranked_predictions(images, iou_thresh, class);
    let points: Vec<CurvePoint> = conf_grid.iter().map(|&c| point_at(&ranked, n_gt, c)).collect();
    let best = points
        .iter()
        .copied()
        .reduce(|best, p| if p.f1 > best.f1 { p } else { best })
        .unwrap_or(CurvePoint {
            conf: 0.0,
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
        });
    F1Curve {
        class_id: class,
        points,
        best,
    }
}
