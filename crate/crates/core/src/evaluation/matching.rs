use serde::Serialize;

use crate::annotation::{Detection, GroundTruth};

/// Outcome for one prediction. `gt` is `None` for a false positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictionMatch {
    pub prediction: usize,
    pub gt: Option<usize>,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchResult {
    /// One entry per prediction, in prediction index order.
    pub predictions: Vec<PredictionMatch>,
    pub unmatched_gts: Vec<usize>,
}

impl MatchResult {
    pub fn true_positives(&self) -> usize {
        self.predictions.iter().filter(|m| m.gt.is_some()).count()
    }
}

/// Indices of `preds` by descending confidence; equal confidences keep input order.
pub fn confidence_order(preds: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].confidence.total_cmp(&preds[a].confidence));
    order
}

/// Greedy single-assignment matching of one image.
///
/// Predictions are visited by descending confidence. Each takes the still
/// unmatched ground truth with the highest IoU, provided that IoU reaches
/// `iou_thresh` (and the classes agree when `class_aware`). Equal IoUs go to
/// the lowest ground-truth index.
pub fn match_detections(
    preds: &[Detection],
    gts: &[GroundTruth],
    iou_thresh: f64,
    class_aware: bool,
) -> MatchResult {
    let mut taken = vec![false; gts.len()];
    let mut out: Vec<PredictionMatch> = (0..preds.len())
        .map(|prediction| PredictionMatch {
            prediction,
            gt: None,
            iou: 0.0,
        })
        .collect();
    for pi in confidence_order(preds) {
        let pred = &preds[pi];
        let mut best: Option<(usize, f64)> = None;
        for (gi, gt) in gts.iter().enumerate() {
            if taken[gi] || (class_aware && gt.class_id != pred.class_id) {
                continue;
            }
            let v = pred.bbox.iou(&gt.bbox);
            if v >= iou_thresh && v > 0.0 && best.map_or(true, |(_, b)| v > b) {
                best = Some((gi, v));
            }
        }
        if let Some((gi, v)) = best {
            taken[gi] = true;
            out[pi].gt = Some(gi);
            out[pi].iou = v;
        }
    }
    let unmatched_gts = taken
        .iter()
        .enumerate()
        .filter_map(|(i, t)| (!t).then_some(i))
        .collect();
    MatchResult {
        predictions: out,
        unmatched_gts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::ClassId;
    use crate::geometry::BoundingBox;

    fn bb(x1: f64, y1: f64, x2: f64, y2: f64) -> BoundingBox {
        BoundingBox::new(x1, y1, x2, y2).unwrap()
    }

    fn pred(c: u32, b: BoundingBox, conf: f64) -> Detection {
        Detection::new(ClassId(c), b, conf).unwrap()
    }

    #[test]
    fn exact_match() {
        let b = bb(0.0, 0.0, 10.0, 10.0);
        let m = match_detections(&[pred(0, b, 0.9)], &[GroundTruth::new(ClassId(0), b)], 0.5, true);
        assert_eq!(m.predictions[0].gt, Some(0));
        assert_eq!(m.predictions[0].iou, 1.0);
        assert!(m.unmatched_gts.is_empty());
    }

    #[test]
    fn duplicate_detection_is_false_positive() {
        // both predictions overlap the ground truth at IoU 0.7
        let gt = bb(0.0, 0.0, 10.0, 10.0);
        let shifted = bb(0.0, 0.0, 10.0, 7.0);
        assert!((shifted.iou(&gt) - 0.7).abs() < 1e-12);
        let preds = [pred(0, shifted, 0.8), pred(0, shifted, 0.9)];
        let m = match_detections(&preds, &[GroundTruth::new(ClassId(0), gt)], 0.5, true);
        assert_eq!(m.predictions[1].gt, Some(0));
        assert_eq!(m.predictions[0].gt, None);
        assert_eq!(m.true_positives(), 1);
    }

    #[test]
    fn class_aware_blocks_cross_class() {
        let b = bb(0.0, 0.0, 10.0, 10.0);
        let m = match_detections(&[pred(1, b, 0.9)], &[GroundTruth::new(ClassId(0), b)], 0.5, true);
        assert_eq!(m.predictions[0].gt, None);
        assert_eq!(m.unmatched_gts, vec![0]);
        let m = match_detections(&[pred(1, b, 0.9)], &[GroundTruth::new(ClassId(0), b)], 0.5, false);
        assert_eq!(m.predictions[0].gt, Some(0));
    }

    #[test]
    fn highest_iou_ground_truth_wins_then_lowest_index() {
        let p = bb(0.0, 0.0, 10.0, 10.0);
        let gts = [
            GroundTruth::new(ClassId(0), bb(0.0, 0.0, 10.0, 8.0)),
            GroundTruth::new(ClassId(0), bb(0.0, 0.0, 10.0, 9.0)),
            GroundTruth::new(ClassId(0), bb(0.0, 1.0, 10.0, 10.0)),
        ];
        let m = match_detections(&[pred(0, p, 0.5)], &gts, 0.5, true);
        assert_eq!(m.predictions[0].gt, Some(1));
        let m = match_detections(&[pred(0, p, 0.5)], &gts[1..], 0.5, true);
        assert_eq!(m.predictions[0].gt, Some(0));
    }

    #[test]
    fn below_threshold_stays_unmatched() {
        let m = match_detections(
            &[pred(0, bb(0.0, 0.0, 10.0, 10.0), 0.9)],
            &[GroundTruth::new(ClassId(0), bb(5.0, 0.0, 15.0, 10.0))],
            0.5,
            true,
        );
        assert_eq!(m.predictions[0].gt, None);
    }
}
