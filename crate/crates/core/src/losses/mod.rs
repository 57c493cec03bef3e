//! Detection losses: CIoU box regression, BCE objectness, CE classification,
//! distribution focal loss, and their weighted `v8` / `v11` totals.

mod ciou;
mod dfl;
pub mod gradcheck;
mod prob;
mod total;

pub use ciou::{ciou_grad, ciou_loss, ciou_loss_fixed_alpha, CiouTerms};
pub use dfl::{dfl_grad, dfl_loss, dfl_neighbours, dfl_value, DflBins, DEFAULT_REG_MAX};
pub use prob::{bce_grad, bce_loss, ce_grad, ce_loss, ce_value, EPS};
pub use total::{
    mean_loss, sample_loss, total_loss, LossBreakdown, LossGradients, LossSample, LossTerms,
    LossWeights, Objective, TunedHyperparameters,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("probabilities are not on the simplex (sum {sum})")]
    NotSimplex { sum: f64 },
    #[error("target is not one-hot")]
    NotOneHot,
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("DFL target {target} outside [0, {reg_max}]")]
    TargetOutOfRange { target: f64, reg_max: usize },
    #[error("{0}")]
    Invalid(String),
}
