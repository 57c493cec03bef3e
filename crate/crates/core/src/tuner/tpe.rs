use std::collections::BTreeMap;

use super::{ParamDef, ParamSpace, StudyConfig, TrialRecord, TunerError};
use crate::rng::SplitMix64;

/// Relative floor on kernel bandwidths, as a fraction of the parameter range.
const MIN_BANDWIDTH_FRACTION: f64 = 1e-3;

/// Scott's rule `std * n^(-1/5)` with the sample standard deviation,
/// floored at `1e-3 * range`.
pub fn kde_bandwidth(obs: &[f64], range: f64) -> f64 {
    let floor = MIN_BANDWIDTH_FRACTION * range;
    let n = obs.len();
    if n < 2 {
        return floor;
    }
    let mean = obs.iter().sum::<f64>() / n as f64;
    let var = obs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var.sqrt() * (n as f64).powf(-0.2)).max(floor)
}

/// Log of an equal-weight Gaussian mixture centred on `obs`.
pub fn kde_log_density(x: f64, obs: &[f64], bandwidth: f64) -> f64 {
    let log_norm = -(bandwidth * (2.0 * std::f64::consts::PI).sqrt()).ln() - (obs.len() as f64).ln();
    let terms: Vec<f64> = obs
        .iter()
        .map(|o| -0.5 * ((x - o) / bandwidth).powi(2))
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    log_norm + max + sum.ln()
}

/// Proposes the next parameter assignment.
pub fn sample(
    space: &ParamSpace,
    history: &[TrialRecord],
    cfg: &StudyConfig,
    rng: &mut SplitMix64,
) -> Result<BTreeMap<String, f64>, TunerError> {
    space.validate()?;
    let mut completed: Vec<(&TrialRecord, f64)> = history
        .iter()
        .filter_map(|t| t.completed_value().filter(|v| v.is_finite()).map(|v| (t, v)))
        .collect();
    if completed.is_empty() || completed.len() < cfg.n_startup_trials {
        return Ok(space
            .params
            .iter()
            .map(|(name, def)| {
                let (lo, hi) = def.internal_bounds();
                (name.clone(), def.from_internal(rng.uniform(lo, hi)))
            })
            .collect());
    }
    // maximizing: best first, earlier trial first on ties
    completed.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.id.cmp(&b.0.id)));
    let n = completed.len();
    let n_good = ((cfg.gamma * n as f64).ceil() as usize).clamp(1, n);
    let (good, bad) = completed.split_at(n_good);

    let mut out = BTreeMap::new();
    for (name, def) in &space.params {
        let observe = |group: &[(&TrialRecord, f64)]| -> Vec<f64> {
            group
                .iter()
                .filter_map(|(t, _)| t.params.get(name))
                .map(|&v| def.to_internal(v.clamp(def.lower, def.upper)))
                .collect()
        };
        let value = sample_one(def, &observe(good), &observe(bad), cfg.candidates, rng);
        out.insert(name.clone(), value);
    }
    Ok(out)
}

fn sample_one(def: &ParamDef, good: &[f64], bad: &[f64], candidates: usize, rng: &mut SplitMix64) -> f64 {
    let (lo, hi) = def.internal_bounds();
    let range = hi - lo;
    if good.is_empty() {
        return def.from_internal(rng.uniform(lo, hi));
    }
    let h_good = kde_bandwidth(good, range);
    let h_bad = kde_bandwidth(bad, range);
    let mut best = (f64::NEG_INFINITY, lo);
    for _ in 0..candidates {
        let centre = good[rng.below(good.len() as u64) as usize];
        let x = (centre + h_good * rng.standard_normal()).clamp(lo, hi);
        let log_bad = if bad.is_empty() { -range.ln() } else { kde_log_density(x, bad, h_bad) };
        let score = kde_log_density(x, good, h_good) - log_bad;
        if score > best.0 {
            best = (score, x);
        }
    }
    def.from_internal(best.1)
}
