//! Loading manifests, labels and prediction files.

use std::path::{Path, PathBuf};

use anyhow::Context;
use palletmap_core::annotation::{
    decode_grid, parse_grid, parse_labels, parse_predictions, DatasetManifest, Detection, GroundTruth, ImageEntry,
    Split,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::errors::{read_text, usage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SplitFilter {
    All,
    Train,
    Val,
    Test,
}

impl SplitFilter {
    pub fn admits(self, split: Split) -> bool {
        match self {
            SplitFilter::All => true,
            SplitFilter::Train => split == Split::Train,
            SplitFilter::Val => split == Split::Val,
            SplitFilter::Test => split == Split::Test,
        }
    }
}

pub struct Manifest {
    pub manifest: DatasetManifest,
    /// Directory the label paths are relative to.
    pub base: PathBuf,
}

pub fn load_manifest(path: &Path) -> anyhow::Result<Manifest> {
    let text = read_text(path)?;
    let manifest = DatasetManifest::from_json(&text).with_context(|| format!("manifest {}", path.display()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Manifest { manifest, base })
}

pub fn load_ground_truth(base: &Path, entry: &ImageEntry, num_classes: usize) -> anyhow::Result<Vec<GroundTruth>> {
    let path = base.join(&entry.labels);
    let text = read_text(&path)?;
    parse_labels(&text, entry.width as f64, entry.height as f64, num_classes)
        .with_context(|| format!("labels {}", path.display()))
}

/// `{id}.txt` if present, else `{id}.grid`.
pub fn find_predictions(dir: &Path, id: &str) -> Option<PathBuf> {
    ["txt", "grid"]
        .iter()
        .map(|ext| dir.join(format!("{id}.{ext}")))
        .find(|p| p.is_file())
}

pub fn load_predictions(path: &Path, width: f64, height: f64, cfg: &RunConfig) -> anyhow::Result<Vec<Detection>> {
    let text = read_text(path)?;
    let dets = if path.extension().is_some_and(|e| e == "grid") {
        let grid = parse_grid(&text).with_context(|| format!("grid {}", path.display()))?;
        if grid.num_classes() != cfg.num_classes {
            return Err(anyhow::anyhow!(
                "grid {}: {} classes, expected {}",
                path.display(),
                grid.num_classes(),
                cfg.num_classes
            ));
        }
        decode_grid(&grid, width, height, cfg.decode_conf)
    } else {
        parse_predictions(&text, width, height, cfg.num_classes)
    };
    dets.with_context(|| format!("predictions {}", path.display()))
}

#[derive(Debug, Clone, Serialize)]
pub struct Skipped {
    pub id: String,
    pub reason: String,
}

pub struct LoadedImage {
    pub entry: ImageEntry,
    pub ground_truths: Vec<GroundTruth>,
    pub detections: Vec<Detection>,
}

/// Images of the manifest with their predictions, in manifest order.
/// Images without a prediction file are skipped and listed.
pub fn load_dataset(
    manifest: &Manifest,
    predictions: &Path,
    filter: SplitFilter,
    cfg: &RunConfig,
) -> anyhow::Result<(Vec<LoadedImage>, Vec<Skipped>)> {
    if !predictions.is_dir() {
        return Err(crate::errors::io_failure(
            predictions,
            std::io::Error::new(std::io::ErrorKind::NotFound, "prediction directory not found"),
        ));
    }
    if manifest.manifest.num_classes() != cfg.num_classes {
        return Err(usage(format!(
            "manifest lists {} classes but num_classes is {}",
            manifest.manifest.num_classes(),
            cfg.num_classes
        )));
    }
    let mut loaded = Vec::new();
    let mut skipped = Vec::new();
    for entry in manifest.manifest.images.iter().filter(|e| filter.admits(e.split)) {
        let Some(pred_path) = find_predictions(predictions, &entry.id) else {
            skipped.push(Skipped { id: entry.id.clone(), reason: "missing prediction file".into() });
            continue;
        };
        let ground_truths = load_ground_truth(&manifest.base, entry, cfg.num_classes)?;
        let detections = load_predictions(&pred_path, entry.width as f64, entry.height as f64, cfg)?;
        loaded.push(LoadedImage { entry: entry.clone(), ground_truths, detections });
    }
    Ok((loaded, skipped))
}

pub fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", to_json(value));
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output types serialize")
}
