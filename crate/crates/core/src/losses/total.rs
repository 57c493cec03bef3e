//! Weighted detection objectives.
//!
//! `v8`:  `box * L_ciou + obj * L_obj + cls * L_cls`
//! `v11`: the same plus `dfl * L_dfl`

use serde::{Deserialize, Serialize};

use super::ciou::{ciou_grad, ciou_loss};
use super::dfl::{dfl_grad, dfl_loss, DflBins};
use super::prob::{bce_grad, bce_loss, ce_grad, ce_loss};
use super::LossError;
use crate::geometry::BoundingBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    V8,
    V11,
}

impl std::str::FromStr for Objective {
    type Err = LossError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "v8" => Ok(Objective::V8),
            "v11" => Ok(Objective::V11),
            other => Err(LossError::Invalid(format!("unknown objective `{other}`"))),
        }
    }
}

/// Loss coefficients. Missing keys default to 1.
///
/// `iou` is carried as tuned configuration only; the box term is scaled by
/// `box`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    #[serde(rename = "box")]
    pub box_: f64,
    pub obj: f64,
    pub cls: f64,
    pub dfl: f64,
    pub iou: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            box_: 1.0,
            obj: 1.0,
            cls: 1.0,
            dfl: 1.0,
            iou: 1.0,
        }
    }
}

impl LossWeights {
    pub fn zero() -> Self {
        Self {
            box_: 0.0,
            obj: 0.0,
            cls: 0.0,
            dfl: 0.0,
            iou: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), LossError> {
        for (name, w) in [
            ("box", self.box_),
            ("obj", self.obj),
            ("cls", self.cls),
            ("dfl", self.dfl),
            ("iou", self.iou),
        ] {
            if !w.is_finite() || w < 0.0 {
                return Err(LossError::Invalid(format!("weight `{name}` must be finite and >= 0, got {w}")));
            }
        }
        Ok(())
    }
}

/// Loss weights plus the pass-through learning rate of a tuned run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunedHyperparameters {
    #[serde(flatten)]
    pub weights: LossWeights,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr0: Option<f64>,
}

/// Unweighted per-term values fed into [`total_loss`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub ciou: f64,
    pub obj: f64,
    pub cls: f64,
    pub dfl: f64,
}

/// Gradients of the weighted total, one block per input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossGradients {
    /// w.r.t. predicted corners `(x1, y1, x2, y2)`
    pub bbox: [f64; 4],
    /// w.r.t. objectness probability
    pub obj: f64,
    /// w.r.t. each class probability
    pub cls: Vec<f64>,
    /// w.r.t. each DFL bin probability; empty under `v8`
    pub dfl: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub objective: Objective,
    pub ciou: f64,
    pub obj: f64,
    pub cls: f64,
    pub dfl: f64,
    pub total: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gradients: Option<LossGradients>,
}

pub fn total_loss(
    terms: &LossTerms,
    weights: &LossWeights,
    objective: Objective,
) -> Result<LossBreakdown, LossError> {
    weights.validate()?;
    let mut total = weights.box_ * terms.ciou + weights.obj * terms.obj + weights.cls * terms.cls;
    match objective {
        Objective::V8 if terms.dfl != 0.0 => {
            return Err(LossError::Invalid(format!(
                "v8 objective has no DFL term but dfl = {} was supplied",
                terms.dfl
            )))
        }
        Objective::V8 => {}
        Objective::V11 => total += weights.dfl * terms.dfl,
    }
    Ok(LossBreakdown {
        objective,
        ciou: terms.ciou,
        obj: terms.obj,
        cls: terms.cls,
        dfl: terms.dfl,
        total,
        gradients: None,
    })
}

/// Everything needed to score one assigned prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSample {
    pub pred: BoundingBox,
    pub gt: BoundingBox,
    pub objectness_target: bool,
    pub objectness: f64,
    pub class_target: Vec<f64>,
    pub class_probs: Vec<f64>,
    /// Target coordinate and bin distribution, for `v11`.
    pub dfl: Option<(f64, DflBins)>,
}

/// Scores one sample and attaches weighted gradients.
pub fn sample_loss(
    sample: &LossSample,
    weights: &LossWeights,
    objective: Objective,
) -> Result<LossBreakdown, LossError> {
    let dfl = match (objective, &sample.dfl) {
        (Objective::V11, Some((t, bins))) => Some((dfl_loss(*t, bins)?, dfl_grad(*t, bins)?)),
        (Objective::V11, None) => {
            return Err(LossError::Invalid("v11 objective needs a DFL target".into()))
        }
        (Objective::V8, _) => None,
    };
    let terms = LossTerms {
        ciou: ciou_loss(&sample.pred, &sample.gt).loss,
        obj: bce_loss(sample.objectness_target, sample.objectness),
        cls: ce_loss(&sample.class_target, &sample.class_probs)?,
        dfl: dfl.as_ref().map_or(0.0, |d| d.0),
    };
    let mut out = total_loss(&terms, weights, objective)?;
    let bbox = ciou_grad(&sample.pred, &sample.gt).map(|g| weights.box_ * g);
    out.gradients = Some(LossGradients {
        bbox,
        obj: weights.obj * bce_grad(sample.objectness_target, sample.objectness),
        cls: ce_grad(&sample.class_target, &sample.class_probs)?
            .into_iter()
            .map(|g| weights.cls * g)
            .collect(),
        dfl: dfl.map_or_else(Vec::new, |d| d.1.into_iter().map(|g| weights.dfl * g).collect()),
    });
    Ok(out)
}

/// Arithmetic mean of per-sample breakdowns (gradients dropped); `None` when empty.
pub fn mean_loss(items: &[LossBreakdown]) -> Option<LossBreakdown> {
    let first = items.first()?;
    let n = items.len() as f64;
    let avg = |f: fn(&LossBreakdown) -> f64| items.iter().map(f).sum::<f64>() / n;
    Some(LossBreakdown {
        objective: first.objective,
        ciou: avg(|b| b.ciou),
        obj: avg(|b| b.obj),
        cls: avg(|b| b.cls),
        dfl: avg(|b| b.dfl),
        total: avg(|b| b.total),
        gradients: None,
    })
}
