//! Detection quality metrics.
//!
//! Predictions are matched to ground truth greedily by confidence. From the
//! matches we build a confusion matrix with a background class, per-class
//! confidence/F1 curves, 101-point interpolated AP, and mAP at one IoU
//! threshold or averaged over a range of them.
//!
//! Per-class "accuracy" is the row-normalized diagonal of the confusion
//! matrix taken at a fixed confidence threshold (0.25 by default), i.e.
//! recall at that threshold.

mod ap;
mod confusion;
mod curves;
mod matching;
mod ranking;

pub use ap::{
    ap_from_ranked, average_precision, coco_thresholds, map_range, mean_average_precision,
    RECALL_POINTS,
};
pub use confusion::{class_accuracy, confusion, ConfusionMatrix};
pub use curves::{default_conf_grid, f1_score, pr_f1_curve, CurvePoint, F1Curve};
pub use matching::{confidence_order, match_detections, MatchResult, PredictionMatch};
pub use ranking::{ranked_predictions, Ranked};

use serde::{Deserialize, Serialize};

use crate::annotation::{ClassId, Detection, GroundTruth};

/// Predictions and ground truth of one image.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalImage {
    pub detections: Vec<Detection>,
    pub ground_truths: Vec<GroundTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub num_classes: usize,
    pub iou_thresh: f64,
    /// Confidence cut for the confusion matrix and per-class accuracy.
    pub conf_thresh: f64,
    pub map_thresholds: Vec<f64>,
    pub conf_grid: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            num_classes: crate::annotation::DEFAULT_NUM_CLASSES,
            iou_thresh: 0.5,
            conf_thresh: 0.25,
            map_thresholds: coco_thresholds(),
            conf_grid: default_conf_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class_id: ClassId,
    pub gt_count: usize,
    pub pred_count: usize,
    /// `None` when the class has no ground truth.
    pub accuracy: Option<f64>,
    /// Precision and recall at the best-F1 confidence.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub best_conf: f64,
    pub ap50: Option<f64>,
    pub ap50_95: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub iou_thresh: f64,
    pub conf_thresh: f64,
    pub map_thresholds: Vec<f64>,
    pub images: usize,
    pub classes: Vec<ClassReport>,
    /// mAP at `iou_thresh` (0.5 unless configured otherwise).
    pub map50: f64,
    /// mAP averaged over `map_thresholds`.
    pub map50_95: f64,
    pub confusion: ConfusionMatrix,
    pub curves: Vec<F1Curve>,
}

pub fn evaluate(images: &[EvalImage], cfg: &EvalConfig) -> EvalReport {
    let mut cm = ConfusionMatrix::new(cfg.num_classes);
    for img in images {
        cm.merge(&confusion(
            &img.detections,
            &img.ground_truths,
            cfg.iou_thresh,
            cfg.conf_thresh,
            cfg.num_classes,
        ));
    }
    let mut classes = Vec::with_capacity(cfg.num_classes);
    let mut curves = Vec::with_capacity(cfg.num_classes);
    for c in 0..cfg.num_classes {
        let class = ClassId(c as u32);
        let curve = pr_f1_curve(images, cfg.iou_thresh, class, &cfg.conf_grid);
        let (ranked, gt_count) = ranked_predictions(images, cfg.iou_thresh, class);
        let ap50_95 = if gt_count == 0 || cfg.map_thresholds.is_empty() {
            None
        } else {
            let sum: f64 = cfg
                .map_thresholds
                .iter()
                .filter_map(|&t| average_precision(images, t, class))
                .sum();
            Some(sum / cfg.map_thresholds.len() as f64)
        };
        classes.push(ClassReport {
            class_id: class,
            gt_count,
            pred_count: ranked.len(),
            accuracy: class_accuracy(&cm, class),
            precision: curve.best.precision,
            recall: curve.best.recall,
            f1: curve.best.f1,
            best_conf: curve.best.conf,
            ap50: ap_from_ranked(&ranked, gt_count),
            ap50_95,
        });
        curves.push(curve);
    }
    EvalReport {
        iou_thresh: cfg.iou_thresh,
        conf_thresh: cfg.conf_thresh,
        map_thresholds: cfg.map_thresholds.clone(),
        images: images.len(),
        map50: mean_average_precision(images, cfg.iou_thresh, cfg.num_classes).unwrap_or(0.0),
        map50_95: map_range(images, &cfg.map_thresholds, cfg.num_classes),
        classes,
        confusion: cm,
        curves,
    }
}

/// `class,conf,precision,recall,f1` rows for every curve sample.
pub fn curves_to_csv(report: &EvalReport) -> String {
    let mut out = String::from("class,conf,precision,recall,f1\n");
    for curve in &report.curves {
        for p in &curve.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                curve.class_id, p.conf, p.precision, p.recall, p.f1
            ));
        }
    }
    out
}
