//! Binary and categorical cross-entropy on probabilities.

use super::LossError;

/// Probabilities are clamped to `[EPS, 1 - EPS]` before taking logs.
pub const EPS: f64 = 1e-7;

const SIMPLEX_TOL: f64 = 1e-6;

fn clamp_prob(p: f64) -> f64 {
    p.clamp(EPS, 1.0 - EPS)
}

/// `-[y ln p + (1 - y) ln(1 - p)]` for a binary target.
pub fn bce_loss(target: bool, p: f64) -> f64 {
    let p = clamp_prob(p);
    if target {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Derivative of [`bce_loss`] w.r.t. `p`; zero where the clamp is active.
pub fn bce_grad(target: bool, p: f64) -> f64 {
    if p <= EPS || p >= 1.0 - EPS {
        return 0.0;
    }
    if target {
        -1.0 / p
    } else {
        1.0 / (1.0 - p)
    }
}

fn check_one_hot(target: &[f64]) -> Result<usize, LossError> {
    let mut hot = None;
    for (i, &y) in target.iter().enumerate() {
        if y == 1.0 {
            if hot.is_some() {
                return Err(LossError::NotOneHot);
            }
            hot = Some(i);
        } else if y != 0.0 {
            return Err(LossError::NotOneHot);
        }
    }
    hot.ok_or(LossError::NotOneHot)
}

fn check_simplex(p: &[f64], tol: f64) -> Result<(), LossError> {
    let sum: f64 = p.iter().sum();
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) || (sum - 1.0).abs() > tol {
        return Err(LossError::NotSimplex { sum });
    }
    Ok(())
}

/// `-sum_c y_c ln max(p_c, EPS)` without input checks.
pub fn ce_value(target: &[f64], probs: &[f64]) -> f64 {
    -target
        .iter()
        .zip(probs)
        .map(|(y, p)| y * p.max(EPS).ln())
        .sum::<f64>()
}

/// Categorical cross-entropy of a one-hot target against a probability vector.
pub fn ce_loss(target: &[f64], probs: &[f64]) -> Result<f64, LossError> {
    validate_ce(target, probs)?;
    Ok(ce_value(target, probs))
}

/// Gradient of [`ce_loss`] w.r.t. each probability.
pub fn ce_grad(target: &[f64], probs: &[f64]) -> Result<Vec<f64>, LossError> {
    validate_ce(target, probs)?;
    Ok(target
        .iter()
        .zip(probs)
        .map(|(y, p)| if *p > EPS { -y / p } else { 0.0 })
        .collect())
}

fn validate_ce(target: &[f64], probs: &[f64]) -> Result<(), LossError> {
    if target.len() != probs.len() || target.is_empty() {
        return Err(LossError::LengthMismatch {
            expected: target.len(),
            found: probs.len(),
        });
    }
    check_one_hot(target)?;
    check_simplex(probs, SIMPLEX_TOL)
}

pub(super) fn validate_simplex(p: &[f64], tol: f64) -> Result<(), LossError> {
    check_simplex(p, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn bce_examples() {
        assert!(bce_loss(true, 1.0) < 1.1e-7);
        assert!((bce_loss(true, 0.5) - LN_2).abs() < 1e-12);
        assert_eq!(bce_loss(false, 0.5), bce_loss(true, 0.5));
        assert!(bce_loss(false, 0.0) < 1.1e-7);
    }

    #[test]
    fn bce_monotone() {
        let ps: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
        for w in ps.windows(2) {
            assert!(bce_loss(true, w[1]) < bce_loss(true, w[0]));
            assert!(bce_loss(false, w[1]) > bce_loss(false, w[0]));
        }
    }

    #[test]
    fn ce_examples() {
        assert!(ce_loss(&[1.0, 0.0], &[1.0, 0.0]).unwrap() < 1e-12);
        assert!((ce_loss(&[0.0, 1.0], &[0.5, 0.5]).unwrap() - LN_2).abs() < 1e-12);
        assert!((ce_loss(&[1.0, 0.0], &[0.1, 0.9]).unwrap() - 2.302_585_092_994_045_5).abs() < 1e-12);
    }

    #[test]
    fn ce_rejects_bad_inputs() {
        assert!(matches!(ce_loss(&[1.0, 0.0], &[0.6, 0.6]), Err(LossError::NotSimplex { .. })));
        assert!(matches!(ce_loss(&[0.5, 0.5], &[0.5, 0.5]), Err(LossError::NotOneHot)));
        assert!(matches!(ce_loss(&[1.0, 0.0], &[1.0]), Err(LossError::LengthMismatch { .. })));
        assert!(ce_grad(&[1.0, 1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn clamped_target_mass_gives_tiny_loss() {
        // p_c = 0 for the true class hits the clamp, not infinity
        let l = ce_loss(&[0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((l - (-EPS.ln())).abs() < 1e-12);
    }
}
