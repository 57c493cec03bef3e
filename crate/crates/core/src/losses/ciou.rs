//! Complete-IoU box regression loss and its analytic gradient.
//!
//! `L = 1 - IoU + rho^2 / c^2 + alpha * v` with
//! `v = (4 / pi^2) * (atan(w_gt / h_gt) - atan(w / h))^2` and
//! `alpha = v / ((1 - IoU) + v)`. The gradient holds `alpha` fixed.

use serde::Serialize;

use crate::geometry::BoundingBox;

const FOUR_OVER_PI_SQ: f64 = 4.0 / (std::f64::consts::PI * std::f64::consts::PI);

/// Value of each CIoU ingredient for one box pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CiouTerms {
    pub iou: f64,
    pub rho_sq: f64,
    pub c_sq: f64,
    pub v: f64,
    pub alpha: f64,
    pub loss: f64,
}

fn aspect_penalty(pred: &BoundingBox, gt: &BoundingBox) -> f64 {
    let d = (gt.width() / gt.height()).atan() - (pred.width() / pred.height()).atan();
    FOUR_OVER_PI_SQ * d * d
}

fn trade_off(iou: f64, v: f64) -> f64 {
    let denom = (1.0 - iou) + v;
    // identical aspect ratios (v = 0) switch the term off, including at IoU = 1
    if v == 0.0 || denom == 0.0 {
        0.0
    } else {
        v / denom
    }
}

pub fn ciou_loss(pred: &BoundingBox, gt: &BoundingBox) -> CiouTerms {
    let iou = pred.iou(gt);
    let rho_sq = pred.center_distance_sq(gt);
    let c_sq = pred.enclosing_diagonal_sq(gt);
    let v = aspect_penalty(pred, gt);
    let alpha = trade_off(iou, v);
    CiouTerms {
        iou,
        rho_sq,
        c_sq,
        v,
        alpha,
        loss: 1.0 - iou + rho_sq / c_sq + alpha * v,
    }
}

/// CIoU with a caller-supplied `alpha`; the function [`ciou_grad`] differentiates.
pub fn ciou_loss_fixed_alpha(pred: &BoundingBox, gt: &BoundingBox, alpha: f64) -> f64 {
    1.0 - pred.iou(gt) + pred.center_distance_sq(gt) / pred.enclosing_diagonal_sq(gt)
        + alpha * aspect_penalty(pred, gt)
}

/// Gradient of the CIoU loss w.r.t. the predicted corners `(x1, y1, x2, y2)`.
///
/// `alpha` is evaluated at `pred` and held constant. Where a min/max in the
/// overlap or enclosure is tied, the branch that leaves the coordinate
/// inactive is taken.
pub fn ciou_grad(pred: &BoundingBox, gt: &BoundingBox) -> [f64; 4] {
    let [x1, y1, x2, y2] = pred.corners();
    let [gx1, gy1, gx2, gy2] = gt.corners();
    let (w, h) = (pred.width(), pred.height());

    // intersection
    let iw = x2.min(gx2) - x1.max(gx1);
    let ih = y2.min(gy2) - y1.max(gy1);
    let overlapping = iw > 0.0 && ih > 0.0;
    let inter = if overlapping { iw * ih } else { 0.0 };
    let d_iw = if overlapping {
        [
            if x1 > gx1 { -1.0 } else { 0.0 },
            0.0,
            if x2 < gx2 { 1.0 } else { 0.0 },
            0.0,
        ]
    } else {
        [0.0; 4]
    };
    let d_ih = if overlapping {
        [
            0.0,
            if y1 > gy1 { -1.0 } else { 0.0 },
            0.0,
            if y2 < gy2 { 1.0 } else { 0.0 },
        ]
    } else {
        [0.0; 4]
    };
    let d_inter: [f64; 4] = std::array::from_fn(|k| d_iw[k] * ih.max(0.0) + iw.max(0.0) * d_ih[k]);
    let d_area = [-h, -w, h, w];
    let union = pred.area() + gt.area() - inter;
    let d_union: [f64; 4] = std::array::from_fn(|k| d_area[k] - d_inter[k]);
    let iou = inter / union;
    let d_iou: [f64; 4] = std::array::from_fn(|k| (d_inter[k] * union - inter * d_union[k]) / (union * union));

    // center distance over enclosing diagonal
    let dx = (x1 + x2) / 2.0 - (gx1 + gx2) / 2.0;
    let dy = (y1 + y2) / 2.0 - (gy1 + gy2) / 2.0;
    let rho_sq = dx * dx + dy * dy;
    let d_rho = [dx, dy, dx, dy];
    let cw = x2.max(gx2) - x1.min(gx1);
    let ch = y2.max(gy2) - y1.min(gy1);
    let c_sq = cw * cw + ch * ch;
    let d_c = [
        if x1 < gx1 { -2.0 * cw } else { 0.0 },
        if y1 < gy1 { -2.0 * ch } else { 0.0 },
        if x2 > gx2 { 2.0 * cw } else { 0.0 },
        if y2 > gy2 { 2.0 * ch } else { 0.0 },
    ];
    let d_dist: [f64; 4] = std::array::from_fn(|k| (d_rho[k] * c_sq - rho_sq * d_c[k]) / (c_sq * c_sq));

    // aspect term
    let delta = (gt.width() / gt.height()).atan() - (w / h).atan();
    let v = FOUR_OVER_PI_SQ * delta * delta;
    let alpha = trade_off(iou, v);
    let r = w * w + h * h;
    let dv_dw = -2.0 * FOUR_OVER_PI_SQ * delta * h / r;
    let dv_dh = 2.0 * FOUR_OVER_PI_SQ * delta * w / r;
    let d_v = [-dv_dw, -dv_dh, dv_dw, dv_dh];

    std::array::from_fn(|k| -d_iou[k] + d_dist[k] + alpha * d_v[k])
}
