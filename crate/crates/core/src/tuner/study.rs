use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use super::{sample, should_prune, ParamSpace, StudyConfig, TrialRecord, TrialState, TunerError};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error("pruned at step {step}")]
    Pruned { step: u32 },
    #[error("{0}")]
    Failed(String),
}

/// Handed to the objective so it can report intermediate values.
///
/// `report` returns `Err(Pruned)` when the trial should stop; objectives
/// normally just propagate it with `?`.
pub struct Reporter<'a> {
    trial: &'a mut TrialRecord,
    peers: &'a [TrialRecord],
    cfg: &'a StudyConfig,
}

impl<'a> Reporter<'a> {
    pub fn new(trial: &'a mut TrialRecord, peers: &'a [TrialRecord], cfg: &'a StudyConfig) -> Self {
        Self { trial, peers, cfg }
    }

    pub fn trial_id(&self) -> usize {
        self.trial.id
    }

    pub fn report(&mut self, step: u32, value: f64) -> Result<(), ObjectiveError> {
        if let Some((&last, _)) = self.trial.intermediate.last_key_value() {
            if step <= last {
                return Err(ObjectiveError::Failed(format!(
                    "intermediate step {step} reported after step {last}"
                )));
            }
        }
        if !value.is_finite() {
            return Err(ObjectiveError::Failed(format!("non-finite intermediate value at step {step}")));
        }
        self.trial.intermediate.insert(step, value);
        if should_prune(self.trial, self.peers, step, self.cfg) {
            return Err(ObjectiveError::Pruned { step });
        }
        Ok(())
    }
}

/// A function to maximize.
pub trait Objective: Send + Sync {
    fn name(&self) -> &str {
        "custom"
    }

    /// Space used when the caller does not supply one.
    fn default_space(&self) -> ParamSpace {
        ParamSpace::default()
    }

    fn evaluate(&self, params: &BTreeMap<String, f64>, reporter: &mut Reporter<'_>) -> Result<f64, ObjectiveError>;
}

impl<F> Objective for F
where
    F: Fn(&BTreeMap<String, f64>, &mut Reporter<'_>) -> Result<f64, ObjectiveError> + Send + Sync,
{
    fn evaluate(&self, params: &BTreeMap<String, f64>, reporter: &mut Reporter<'_>) -> Result<f64, ObjectiveError> {
        self(params, reporter)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Study {
    pub trials: Vec<TrialRecord>,
    /// Index into `trials` of the best completed trial.
    pub best: usize,
}

impl Study {
    pub fn best(&self) -> &TrialRecord {
        &self.trials[self.best]
    }

    pub fn count(&self, state: TrialState) -> usize {
        self.trials.iter().filter(|t| t.state == state).count()
    }

    /// One JSON object per trial, newline terminated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for t in &self.trials {
            out.push_str(&serde_json::to_string(t).expect("trial records serialize"));
            out.push('\n');
        }
        out
    }
}

/// Runs `cfg.n_trials` trials one after another and returns the history.
///
/// Failed trials are recorded and skipped. The best trial is the completed
/// one with the highest value, the earliest on ties.
pub fn run_study(space: &ParamSpace, cfg: &StudyConfig, objective: &dyn Objective) -> Result<Study, TunerError> {
    space.validate()?;
    cfg.validate()?;
    let mut rng = SplitMix64::new(cfg.seed);
    let mut trials: Vec<TrialRecord> = Vec::with_capacity(cfg.n_trials);
    for id in 0..cfg.n_trials {
        let params = sample(space, &trials, cfg, &mut rng)?;
        let mut trial = TrialRecord::new(id, params.clone());
        let outcome = {
            let mut reporter = Reporter::new(&mut trial, &trials, cfg);
            objective.evaluate(&params, &mut reporter)
        };
        match outcome {
            Ok(v) if v.is_finite() => {
                trial.value = Some(v);
                trial.state = TrialState::Complete;
            }
            Ok(v) => {
                trial.state = TrialState::Failed;
                trial.error = Some(format!("non-finite objective {v}"));
            }
            Err(ObjectiveError::Pruned { .. }) => trial.state = TrialState::Pruned,
            Err(ObjectiveError::Failed(msg)) => {
                trial.state = TrialState::Failed;
                trial.error = Some(msg);
            }
        }
        trials.push(trial);
    }
    let best = trials
        .iter()
        .enumerate()
        .filter_map(|(i, t)| t.completed_value().map(|v| (i, v)))
        .fold(None::<(usize, f64)>, |acc, (i, v)| match acc {
            Some((_, bv)) if bv >= v => acc,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
        .ok_or(TunerError::NoCompletedTrials(trials.len()))?;
    Ok(Study { trials, best })
}
