//! Sequential hyperparameter search: a univariate TPE sampler with a median
//! pruner, maximizing a user objective.
//!
//! The first `n_startup_trials` draw uniformly (log-uniformly on log-scale
//! parameters). After that each parameter is sampled on its own: completed
//! trials are ranked by value, the best `ceil(gamma * n)` form the "good"
//! group and the rest the "bad" one, each group gets a Gaussian kernel
//! density, and of `candidates` draws from the good density the one with
//! the highest good/bad density ratio wins.
//!
//! Objectives report intermediate values per step; once past the warmup a
//! trial whose value falls strictly below the median of its peers at the
//! same step is pruned.

mod objectives;
mod pruner;
mod study;
mod tpe;

pub use objectives::{builtin_objectives, ConstantObjective, ObjectiveFactory, QuadraticObjective};
pub use pruner::{median, should_prune};
pub use study::{run_study, Objective, ObjectiveError, Reporter, Study};
pub use tpe::{kde_bandwidth, kde_log_density, sample};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::UnknownName;

#[derive(Debug, Error)]
pub enum TunerError {
    #[error("parameter space is empty")]
    EmptySpace,
    #[error("parameter `{name}`: {message}")]
    InvalidParam { name: String, message: String },
    #[error("study config: {0}")]
    Config(String),
    #[error("no trial completed out of {0}")]
    NoCompletedTrials(usize),
    #[error(transparent)]
    UnknownObjective(#[from] UnknownName),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamDef {
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub scale: Scale,
}

impl ParamDef {
    pub fn linear(lower: f64, upper: f64) -> Self {
        Self { lower, upper, scale: Scale::Linear }
    }

    pub fn log(lower: f64, upper: f64) -> Self {
        Self { lower, upper, scale: Scale::Log }
    }

    /// Bounds in the space the sampler works in (log for log-scale).
    pub(crate) fn internal_bounds(&self) -> (f64, f64) {
        (self.to_internal(self.lower), self.to_internal(self.upper))
    }

    pub(crate) fn to_internal(&self, v: f64) -> f64 {
        match self.scale {
            Scale::Linear => v,
            Scale::Log => v.ln(),
        }
    }

    pub(crate) fn from_internal(&self, v: f64) -> f64 {
        let v = match self.scale {
            Scale::Linear => v,
            Scale::Log => v.exp(),
        };
        v.clamp(self.lower, self.upper)
    }

    fn validate(&self, name: &str) -> Result<(), TunerError> {
        let err = |message: String| Err(TunerError::InvalidParam { name: name.to_string(), message });
        if !(self.lower.is_finite() && self.upper.is_finite()) {
            return err("bounds must be finite".into());
        }
        if self.lower >= self.upper {
            return err(format!("lower {} must be below upper {}", self.lower, self.upper));
        }
        if self.scale == Scale::Log && self.lower <= 0.0 {
            return err(format!("log scale needs a positive lower bound, got {}", self.lower));
        }
        Ok(())
    }
}

/// Named parameters, iterated in name order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamSpace {
    pub params: BTreeMap<String, ParamDef>,
}

impl ParamSpace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, def: ParamDef) -> Self {
        self.params.insert(name.to_string(), def);
        self
    }

    pub fn validate(&self) -> Result<(), TunerError> {
        if self.params.is_empty() {
            return Err(TunerError::EmptySpace);
        }
        for (name, def) in &self.params {
            def.validate(name)?;
        }
        Ok(())
    }

    pub fn contains(&self, params: &BTreeMap<String, f64>) -> bool {
        self.params.iter().all(|(name, def)| {
            params.get(name).is_some_and(|v| (def.lower..=def.upper).contains(v))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialState {
    Running,
    Complete,
    Pruned,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub id: usize,
    pub params: BTreeMap<String, f64>,
    /// Intermediate values keyed by step.
    pub intermediate: BTreeMap<u32, f64>,
    /// Final objective; `None` unless the trial completed.
    pub value: Option<f64>,
    pub state: TrialState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn new(id: usize, params: BTreeMap<String, f64>) -> Self {
        Self {
            id,
            params,
            intermediate: BTreeMap::new(),
            value: None,
            state: TrialState::Running,
            error: None,
        }
    }

    /// The final value of a completed trial.
    pub fn completed_value(&self) -> Option<f64> {
        match self.state {
            TrialState::Complete => self.value,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub n_trials: usize,
    pub n_startup_trials: usize,
    pub gamma: f64,
    pub candidates: usize,
    pub warmup_steps: u32,
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            n_trials: 20,
            n_startup_trials: 5,
            gamma: 0.25,
            candidates: 24,
            warmup_steps: 5,
            seed: 0,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<(), TunerError> {
        if self.n_trials == 0 {
            return Err(TunerError::Config("n_trials must be positive".into()));
        }
        if self.n_startup_trials > self.n_trials {
            return Err(TunerError::Config(format!(
                "n_startup_trials {} exceeds n_trials {}",
                self.n_startup_trials, self.n_trials
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(TunerError::Config(format!("gamma {} outside (0, 1)", self.gamma)));
        }
        if self.candidates == 0 {
            return Err(TunerError::Config("candidates must be positive".into()));
        }
        Ok(())
    }
}
