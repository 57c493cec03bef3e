use super::{StudyConfig, TrialRecord};

/// Median with the even-count convention of averaging the middle pair.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

/// True once `step` is past the warmup and the trial's value there is
/// strictly below the median of the peers that also reported at `step`.
///
/// The trial itself is skipped if it appears among `peers`.
pub fn should_prune(trial: &TrialRecord, peers: &[TrialRecord], step: u32, cfg: &StudyConfig) -> bool {
    if step < cfg.warmup_steps {
        return false;
    }
    let Some(&value) = trial.intermediate.get(&step) else {
        return false;
    };
    let mut others: Vec<f64> = peers
        .iter()
        .filter(|p| p.id != trial.id)
        .filter_map(|p| p.intermediate.get(&step).copied())
        .collect();
    match median(&mut others) {
        Some(m) => value < m,
        None => false,
    }
}
