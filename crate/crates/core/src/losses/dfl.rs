//! Distribution focal loss over integer bins.
//!
//! A continuous target `t` in `[0, reg_max]` is spread over its two
//! neighbouring bins `l = floor(t)` and `r = l + 1` with weights `r - t` and
//! `t - l`; the loss is the cross-entropy against those two bins. At
//! `t = reg_max` the pair becomes `(reg_max - 1, reg_max)`.

use serde::{Deserialize, Serialize};

use super::prob::{validate_simplex, EPS};
use super::LossError;

pub const DEFAULT_REG_MAX: usize = 16;

/// Probabilities over bins `0..=reg_max`, summing to 1 within 1e-9.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DflBins {
    probs: Vec<f64>,
}

impl DflBins {
    pub fn new(probs: Vec<f64>) -> Result<Self, LossError> {
        if probs.len() < 2 {
            return Err(LossError::Invalid(format!(
                "need at least two bins, got {}",
                probs.len()
            )));
        }
        validate_simplex(&probs, 1e-9)?;
        if probs.iter().any(|p| *p > 1.0) {
            return Err(LossError::Invalid("bin probability above 1".into()));
        }
        Ok(Self { probs })
    }

    pub fn reg_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Expected bin index, the decoded coordinate.
    pub fn expectation(&self) -> f64 {
        self.probs.iter().enumerate().map(|(i, p)| i as f64 * p).sum()
    }
}

impl TryFrom<Vec<f64>> for DflBins {
    type Error = LossError;

    fn try_from(probs: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(probs)
    }
}

impl From<DflBins> for Vec<f64> {
    fn from(bins: DflBins) -> Self {
        bins.probs
    }
}

/// `(left bin, right bin, left weight, right weight)` for a target.
pub fn dfl_neighbours(target: f64, reg_max: usize) -> Result<(usize, usize, f64, f64), LossError> {
    if !(0.0..=reg_max as f64).contains(&target) {
        return Err(LossError::TargetOutOfRange { target, reg_max });
    }
    let mut left = target.floor() as usize;
    if left >= reg_max {
        left = reg_max - 1;
    }
    let right = left + 1;
    Ok((left, right, right as f64 - target, target - left as f64))
}

/// Two-bin cross-entropy on raw probabilities, without simplex checks.
pub fn dfl_value(target: f64, probs: &[f64]) -> Result<f64, LossError> {
    let (l, r, wl, wr) = dfl_neighbours(target, probs.len() - 1)?;
    Ok(-(wl * probs[l].max(EPS).ln() + wr * probs[r].max(EPS).ln()))
}

pub fn dfl_loss(target: f64, bins: &DflBins) -> Result<f64, LossError> {
    dfl_value(target, &bins.probs)
}

/// Gradient of [`dfl_loss`] w.r.t. each bin probability.
pub fn dfl_grad(target: f64, bins: &DflBins) -> Result<Vec<f64>, LossError> {
    let (l, r, wl, wr) = dfl_neighbours(target, bins.reg_max())?;
    let mut g = vec![0.0; bins.probs.len()];
    if bins.probs[l] > EPS {
        g[l] = -wl / bins.probs[l];
    }
    if bins.probs[r] > EPS {
        g[r] = -wr / bins.probs[r];
    }
    Ok(g)
}
