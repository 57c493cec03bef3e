use std::collections::BTreeMap;

use super::{Objective, ObjectiveError, ParamDef, ParamSpace, Reporter};
use crate::annotation::ClassId;
use crate::association::{associate_iou, split_by_class};
use crate::evaluation::{map_range, coco_thresholds, EvalImage};
use crate::registry::Registry;
use crate::synthetic::{eval_image, generate_scenes, noisy_predictions, SceneConfig};

/// `-(x - 0.3)^2` on `x` in `[0, 1]`.
pub struct QuadraticObjective {
    pub optimum: f64,
}

impl Default for QuadraticObjective {
    fn default() -> Self {
        Self { optimum: 0.3 }
    }
}

impl Objective for QuadraticObjective {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn default_space(&self) -> ParamSpace {
        ParamSpace::new().with("x", ParamDef::linear(0.0, 1.0))
    }

    fn evaluate(&self, params: &BTreeMap<String, f64>, _: &mut Reporter<'_>) -> Result<f64, ObjectiveError> {
        let x = *params.get("x").ok_or_else(|| ObjectiveError::Failed("missing parameter `x`".into()))?;
        Ok(-(x - self.optimum).powi(2))
    }
}

/// Reports the same value at every step, so nothing is ever below the median.
pub struct ConstantObjective {
    pub value: f64,
    pub steps: u32,
}

impl Default for ConstantObjective {
    fn default() -> Self {
        Self { value: 1.0, steps: 10 }
    }
}

impl Objective for ConstantObjective {
    fn name(&self) -> &str {
        "constant"
    }

    fn default_space(&self) -> ParamSpace {
        ParamSpace::new().with("x", ParamDef::linear(0.0, 1.0))
    }

    fn evaluate(&self, _: &BTreeMap<String, f64>, reporter: &mut Reporter<'_>) -> Result<f64, ObjectiveError> {
        for step in 0..self.steps {
            reporter.report(step, self.value)?;
        }
        Ok(self.value)
    }
}

/// Tunes the IoU association threshold `tau` and the detection confidence
/// cut `conf` on a synthetic warehouse set with jittered predictions.
///
/// The score is mAP@0.5:0.95 of the kept detections times the share of
/// ground-truth hole links reproduced by IoU association. Step `s` reports
/// the score over the first `s + 1` images.
pub struct AssociationDemoObjective {
    images: Vec<(EvalImage, Vec<Option<usize>>)>,
}

impl AssociationDemoObjective {
    pub fn new(seed: u64) -> Self {
        let cfg = SceneConfig { stray_holes: 1, ..Default::default() };
        let scenes = generate_scenes("demo", 12, &cfg, seed).expect("demo scene config is valid");
        let images = scenes
            .iter()
            .map(|s| {
                let img = eval_image(s, &noisy_predictions(s, 0.04, seed)).expect("synthetic boxes are valid");
                (img, s.parent.clone())
            })
            .collect();
        Self { images }
    }

    fn link_agreement(images: &[(EvalImage, Vec<Option<usize>>)], tau: f64) -> f64 {
        let (mut agree, mut total) = (0usize, 0usize);
        for (img, parents) in images {
            let holes: Vec<_> = img.detections.iter().filter(|d| d.class_id == ClassId::HOLE).copied().collect();
            let (_, pallets) = split_by_class(&img.detections, ClassId::HOLE, ClassId::PALLET);
            // predictions list ground-truth holes first, in order, then extras
            let map = associate_iou(&holes, &pallets, tau);
            for (i, expected) in parents.iter().enumerate() {
                total += 1;
                if map.pallet_of(i) == *expected {
                    agree += 1;
                }
            }
        }
        if total == 0 {
            1.0
        } else {
            agree as f64 / total as f64
        }
    }
}

impl Objective for AssociationDemoObjective {
    fn name(&self) -> &str {
        "association"
    }

    fn default_space(&self) -> ParamSpace {
        ParamSpace::new()
            .with("tau", ParamDef::log(0.005, 0.5))
            .with("conf", ParamDef::linear(0.01, 0.9))
    }

    fn evaluate(&self, params: &BTreeMap<String, f64>, reporter: &mut Reporter<'_>) -> Result<f64, ObjectiveError> {
        let get = |k: &str| params.get(k).copied().ok_or_else(|| ObjectiveError::Failed(format!("missing parameter `{k}`")));
        let (tau, conf) = (get("tau")?, get("conf")?);
        let filtered: Vec<_> = self
            .images
            .iter()
            .map(|(img, parents)| {
                let detections = img.detections.iter().filter(|d| d.confidence >= conf).copied().collect();
                (EvalImage { detections, ground_truths: img.ground_truths.clone() }, parents.clone())
            })
            .collect();
        let thresholds = coco_thresholds();
        let mut score = 0.0;
        for n in 1..=filtered.len() {
            let subset = &filtered[..n];
            let evals: Vec<EvalImage> = subset.iter().map(|(e, _)| e.clone()).collect();
            score = map_range(&evals, &thresholds, 2) * Self::link_agreement(subset, tau);
            reporter.report(n as u32 - 1, score)?;
        }
        Ok(score)
    }
}

pub type ObjectiveFactory = dyn Fn(u64) -> Box<dyn Objective> + Send + Sync;

/// Built-in objectives, constructed from the study seed.
pub fn builtin_objectives() -> Registry<ObjectiveFactory> {
    let mut reg: Registry<ObjectiveFactory> = Registry::new("objective");
    reg.register("quadratic", Box::new(|_| Box::new(QuadraticObjective::default()) as Box<dyn Objective>))
        .register("constant", Box::new(|_| Box::new(ConstantObjective::default()) as Box<dyn Objective>))
        .register("association", Box::new(|seed| Box::new(AssociationDemoObjective::new(seed)) as Box<dyn Objective>));
    reg
}
