use std::path::PathBuf;

use palletmap_core::annotation::Split;
use palletmap_core::evaluation::{curves_to_csv, evaluate, EvalReport};
use serde::Serialize;

use super::associate::{associate_detections, AssociationFlags, ImageAssociation};
use super::evaluate::{eval_images, EvalFlags};
use crate::config::RunConfig;
use crate::errors::write_bytes;
use crate::inputs::{load_dataset, load_manifest, to_json, Skipped, SplitFilter};
use crate::Outcome;

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long, env = "PALLETMAP_MANIFEST")]
    manifest: PathBuf,

    /// Directory of `{id}.txt` or `{id}.grid` prediction files.
    #[arg(long)]
    predictions: PathBuf,

    #[arg(long, value_enum, default_value = "all")]
    split: SplitFilter,

    #[command(flatten)]
    association: AssociationFlags,

    #[command(flatten)]
    eval: EvalFlags,

    /// Write `associations.json`, `evaluation.json` and `curves.csv` here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Settings {
    method: String,
    tau: f64,
    conf: f64,
    iou: f64,
}

#[derive(Debug, Serialize)]
struct ImageResult {
    id: String,
    split: Split,
    #[serde(flatten)]
    association: ImageAssociation,
}

#[derive(Debug, Default, Serialize)]
struct Totals {
    images: usize,
    skipped: usize,
    holes: usize,
    pallets: usize,
    assigned: usize,
    unassigned: usize,
}

#[derive(Debug, Serialize)]
struct Associations<'a> {
    settings: &'a Settings,
    totals: &'a Totals,
    images: &'a [ImageResult],
}

#[derive(Debug, Serialize)]
struct PipelineReport<'a> {
    settings: &'a Settings,
    totals: &'a Totals,
    skipped: &'a [Skipped],
    images: &'a [ImageResult],
    evaluation: &'a EvalReport,
}

pub fn run(args: Args, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let (assoc, conf) = args.association.resolve(cfg)?;
    let ev = args.eval.resolve(cfg, Some(conf))?;
    let manifest = load_manifest(&args.manifest)?;
    let (images, skipped) = load_dataset(&manifest, &args.predictions, args.split, cfg)?;

    let mut totals = Totals { images: images.len(), skipped: skipped.len(), ..Default::default() };
    let mut results = Vec::with_capacity(images.len());
    for img in &images {
        let a = associate_detections(&img.detections, &assoc, conf)?;
        totals.holes += a.holes.len();
        totals.pallets += a.pallets.len();
        totals.assigned += a.assigned;
        totals.unassigned += a.unassigned;
        results.push(ImageResult { id: img.entry.id.clone(), split: img.entry.split, association: a });
    }
    let evaluation = evaluate(&eval_images(&images), &ev);
    let settings = Settings { method: assoc.method.clone(), tau: assoc.tau, conf, iou: ev.iou_thresh };

    if let Some(dir) = &args.out {
        let associations = Associations { settings: &settings, totals: &totals, images: &results };
        write_bytes(&dir.join("associations.json"), (to_json(&associations) + "\n").as_bytes())?;
        write_bytes(&dir.join("evaluation.json"), (to_json(&evaluation) + "\n").as_bytes())?;
        write_bytes(&dir.join("curves.csv"), curves_to_csv(&evaluation).as_bytes())?;
    }
    let report = PipelineReport {
        settings: &settings,
        totals: &totals,
        skipped: &skipped,
        images: &results,
        evaluation: &evaluation,
    };
    println!("{}", to_json(&report));
    Ok(Outcome::Clean)
}
