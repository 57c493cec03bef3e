use std::path::{Path, PathBuf};

use anyhow::Context;
use palletmap_core::annotation::{format_labels, parse_label_annotations};
use palletmap_core::augmentation::{AugmentationSpec, Pipeline, Raster, Sample};
use serde::Serialize;

use crate::config::RunConfig;
use crate::errors::{io_failure, read_text, usage, write_bytes};
use crate::inputs::print_json;
use crate::Outcome;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Augmentation spec JSON; defaults to the config's `augmentation` block.
    #[arg(long)]
    spec: Option<PathBuf>,

    /// Directory of `.ppm`/`.pgm` images with optional `{stem}.txt` labels.
    #[arg(long = "in")]
    input: PathBuf,

    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Serialize)]
struct ImageSummary {
    id: String,
    output: String,
    annotations_in: usize,
    annotations_out: usize,
}

#[derive(Debug, Serialize)]
struct Summary {
    spec: AugmentationSpec,
    steps: Vec<&'static str>,
    images: Vec<ImageSummary>,
}

fn raster_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| io_failure(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| io_failure(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "ppm" || e == "pgm") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn run(args: Args, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let mut spec = match &args.spec {
        Some(path) => serde_json::from_str::<AugmentationSpec>(&read_text(path)?)
            .map_err(|e| usage(format!("spec {}: {e}", path.display())))?,
        None => cfg.augmentation.clone(),
    };
    if let Some(seed) = cfg.seed_override {
        spec.seed = seed;
    }
    let pipeline = Pipeline::from_spec(&spec).map_err(|e| usage(e.to_string()))?;

    let mut images = Vec::new();
    for path in raster_files(&args.input)? {
        let id = path.file_stem().and_then(|s| s.to_str()).context("non-UTF-8 file name")?.to_string();
        let bytes = std::fs::read(&path).map_err(|e| io_failure(&path, e))?;
        let raster = Raster::from_pnm(&bytes).with_context(|| path.display().to_string())?;
        let label_path = path.with_extension("txt");
        let annotations = if label_path.is_file() {
            parse_label_annotations(&read_text(&label_path)?, cfg.num_classes)
                .with_context(|| label_path.display().to_string())?
        } else {
            Vec::new()
        };
        let annotations_in = annotations.len();
        let out = pipeline
            .apply(&id, Sample { raster, annotations })
            .with_context(|| format!("augmenting {id}"))?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("ppm");
        let out_path = args.out.join(format!("{id}.{ext}"));
        write_bytes(&out_path, &out.raster.to_pnm())?;
        if label_path.is_file() {
            write_bytes(&args.out.join(format!("{id}.txt")), format_labels(&out.annotations).as_bytes())?;
        }
        images.push(ImageSummary {
            id,
            output: out_path.display().to_string(),
            annotations_in,
            annotations_out: out.annotations.len(),
        });
    }
    print_json(&Summary { steps: pipeline.step_names(), spec, images })?;
    Ok(Outcome::Clean)
}
