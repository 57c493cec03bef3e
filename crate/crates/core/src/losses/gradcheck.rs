//! Finite-difference verification of the analytic loss gradients.
//!
//! Every check draws random non-degenerate inputs, evaluates the analytic
//! gradient, and compares it against central differences of the loss value
//! with step `h = 1e-5`. The per-sample error is
//! `max_k |analytic_k - numeric_k| / max(max_k |numeric_k|, max_k |analytic_k|, 1e-12)`.

use serde::{Deserialize, Serialize};

use super::ciou::{ciou_grad, ciou_loss, ciou_loss_fixed_alpha};
use super::dfl::{dfl_grad, dfl_value, DflBins};
use super::prob::{bce_grad, bce_loss, ce_grad, ce_value};
use crate::geometry::BoundingBox;
use crate::registry::Registry;
use crate::rng::SplitMix64;

pub const FD_STEP: f64 = 1e-5;
pub const MAX_REL_ERR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub loss: String,
    pub samples: usize,
    pub max_rel_err: f64,
    pub pass: bool,
}

pub trait GradientCheck: Send + Sync {
    fn name(&self) -> &'static str;

    /// Relative error of one random sample.
    fn sample_error(&self, rng: &mut SplitMix64) -> f64;
}

pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs())
        .fold(0.0, f64::max);
    let scale = analytic
        .iter()
        .chain(numeric)
        .map(|v| v.abs())
        .fold(1e-12, f64::max);
    diff / scale
}

/// Central differences of `f` at `x`.
pub fn central_differences(x: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut buf = x.to_vec();
    (0..x.len())
        .map(|k| {
            buf[k] = x[k] + FD_STEP;
            let up = f(&buf);
            buf[k] = x[k] - FD_STEP;
            let down = f(&buf);
            buf[k] = x[k];
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

pub fn run_check(check: &dyn GradientCheck, samples: usize, seed: u64) -> GradCheckReport {
    let mut rng = SplitMix64::for_key(seed, check.name());
    let max_rel_err = (0..samples)
        .map(|_| check.sample_error(&mut rng))
        .fold(0.0, f64::max);
    GradCheckReport {
        loss: check.name().to_string(),
        samples,
        max_rel_err,
        pass: max_rel_err.is_finite() && max_rel_err < MAX_REL_ERR,
    }
}

fn random_simplex(rng: &mut SplitMix64, n: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.uniform(0.05, 1.0)).collect();
    let sum: f64 = raw.iter().sum();
    // keeps every entry >= floor
    let scale = 1.0 - floor * n as f64;
    raw.iter().map(|r| floor + scale * r / sum).collect()
}

pub struct CiouCheck;

impl CiouCheck {
    /// A box pair where no corner sits within 1e-3 of a kink of the
    /// overlap or enclosure.
    fn draw(rng: &mut SplitMix64) -> (BoundingBox, BoundingBox) {
        loop {
            let mut corners = [0.0; 8];
            for b in 0..2 {
                let x = rng.uniform(0.0, 100.0);
                let y = rng.uniform(0.0, 100.0);
                corners[4 * b] = x;
                corners[4 * b + 1] = y;
                corners[4 * b + 2] = x + rng.uniform(1.0, 50.0);
                corners[4 * b + 3] = y + rng.uniform(1.0, 50.0);
            }
            let [x1, y1, x2, y2, gx1, gy1, gx2, gy2] = corners;
            let xs = [x1, x2];
            let gxs = [gx1, gx2];
            let ys = [y1, y2];
            let gys = [gy1, gy2];
            let near = |a: &[f64], b: &[f64]| a.iter().any(|p| b.iter().any(|q| (p - q).abs() < 1e-3));
            if near(&xs, &gxs) || near(&ys, &gys) {
                continue;
            }
            let pred = BoundingBox::new(x1, y1, x2, y2).expect("positive size");
            let gt = BoundingBox::new(gx1, gy1, gx2, gy2).expect("positive size");
            return (pred, gt);
        }
    }
}

impl GradientCheck for CiouCheck {
    fn name(&self) -> &'static str {
        "ciou"
    }

    fn sample_error(&self, rng: &mut SplitMix64) -> f64 {
        let (pred, gt) = Self::draw(rng);
        let alpha = ciou_loss(&pred, &gt).alpha;
        let analytic = ciou_grad(&pred, &gt);
        let numeric = central_differences(&pred.corners(), |c| {
            let p = BoundingBox::new(c[0], c[1], c[2], c[3]).expect("step keeps box valid");
            ciou_loss_fixed_alpha(&p, &gt, alpha)
        });
        relative_error(&analytic, &numeric)
    }
}

pub struct BceCheck;

impl GradientCheck for BceCheck {
    fn name(&self) -> &'static str {
        "bce"
    }

    fn sample_error(&self, rng: &mut SplitMix64) -> f64 {
        let y = rng.coin();
        let p = rng.uniform(0.01, 0.99);
        let numeric = central_differences(&[p], |x| bce_loss(y, x[0]));
        relative_error(&[bce_grad(y, p)], &numeric)
    }
}

pub struct CeCheck;

impl GradientCheck for CeCheck {
    fn name(&self) -> &'static str {
        "ce"
    }

    fn sample_error(&self, rng: &mut SplitMix64) -> f64 {
        let c = 2 + rng.below(5) as usize;
        let probs = random_simplex(rng, c, 0.01);
        let mut target = vec![0.0; c];
        target[rng.below(c as u64) as usize] = 1.0;
        let analytic = ce_grad(&target, &probs).expect("valid sample");
        let numeric = central_differences(&probs, |p| ce_value(&target, p));
        relative_error(&analytic, &numeric)
    }
}

pub struct DflCheck {
    pub reg_max: usize,
}

impl GradientCheck for DflCheck {
    fn name(&self) -> &'static str {
        "dfl"
    }

    fn sample_error(&self, rng: &mut SplitMix64) -> f64 {
        let bins = DflBins::new(random_simplex(rng, self.reg_max + 1, 0.005)).expect("simplex");
        let target = loop {
            let t = rng.uniform(0.0, self.reg_max as f64);
            if (t - t.round()).abs() > 1e-3 {
                break t;
            }
        };
        let analytic = dfl_grad(target, &bins).expect("target in range");
        let numeric = central_differences(bins.probs(), |p| dfl_value(target, p).expect("target in range"));
        relative_error(&analytic, &numeric)
    }
}

pub type CheckFactory = dyn Fn() -> Box<dyn GradientCheck> + Send + Sync;

/// `ciou`, `bce`, `ce` and `dfl` (16 bins past zero).
pub fn builtin_checks() -> Registry<CheckFactory> {
    let mut reg: Registry<CheckFactory> = Registry::new("loss");
    reg.register("ciou", Box::new(|| Box::new(CiouCheck)))
        .register("bce", Box::new(|| Box::new(BceCheck)))
        .register("ce", Box::new(|| Box::new(CeCheck)))
        .register(
            "dfl",
            Box::new(|| Box::new(DflCheck { reg_max: super::dfl::DEFAULT_REG_MAX })),
        );
    reg
}
