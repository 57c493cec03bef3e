use std::path::PathBuf;

use palletmap_core::evaluation::{curves_to_csv, evaluate, EvalConfig, EvalImage, EvalReport};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::errors::{usage, write_bytes};
use crate::inputs::{load_dataset, load_manifest, to_json, LoadedImage, Skipped, SplitFilter};
use crate::Outcome;

#[derive(Debug, Clone, clap::Args)]
pub struct EvalFlags {
    /// IoU a prediction needs to match a ground-truth box.
    #[arg(long, env = "PALLETMAP_IOU")]
    pub iou: Option<f64>,
}

impl EvalFlags {
    pub fn resolve(&self, cfg: &RunConfig, conf: Option<f64>) -> anyhow::Result<EvalConfig> {
        let mut ev = cfg.evaluation.clone();
        ev.num_classes = cfg.num_classes;
        if let Some(iou) = self.iou {
            ev.iou_thresh = iou;
        }
        if let Some(c) = conf {
            ev.conf_thresh = c;
        }
        if !(ev.iou_thresh > 0.0 && ev.iou_thresh <= 1.0) {
            return Err(usage(format!("IoU threshold {} outside (0, 1]", ev.iou_thresh)));
        }
        if !(0.0..=1.0).contains(&ev.conf_thresh) {
            return Err(usage(format!("confidence threshold {} outside [0, 1]", ev.conf_thresh)));
        }
        if ev.map_thresholds.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            return Err(usage("mAP thresholds must lie in (0, 1]"));
        }
        Ok(ev)
    }
}

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long, env = "PALLETMAP_MANIFEST")]
    manifest: PathBuf,

    /// Directory of `{id}.txt` or `{id}.grid` prediction files.
    #[arg(long)]
    predictions: PathBuf,

    #[arg(long, value_enum, default_value = "all")]
    split: SplitFilter,

    /// Confidence cut for the confusion matrix and per-class accuracy.
    #[arg(long, env = "PALLETMAP_CONF")]
    conf: Option<f64>,

    #[command(flatten)]
    eval: EvalFlags,

    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct EvaluationOutput {
    pub evaluated_images: usize,
    pub skipped: Vec<Skipped>,
    pub evaluation: EvalReport,
}

pub fn eval_images(images: &[LoadedImage]) -> Vec<EvalImage> {
    images
        .iter()
        .map(|img| EvalImage { detections: img.detections.clone(), ground_truths: img.ground_truths.clone() })
        .collect()
}

pub fn run(args: Args, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let ev = args.eval.resolve(cfg, args.conf)?;
    let manifest = load_manifest(&args.manifest)?;
    let (images, skipped) = load_dataset(&manifest, &args.predictions, args.split, cfg)?;
    let report = evaluate(&eval_images(&images), &ev);
    let text = match cfg.format {
        Format::Csv => curves_to_csv(&report),
        Format::Json => {
            to_json(&EvaluationOutput { evaluated_images: images.len(), skipped, evaluation: report }) + "\n"
        }
    };
    if let Some(out) = &args.out {
        write_bytes(out, text.as_bytes())?;
    }
    print!("{text}");
    Ok(Outcome::Clean)
}
