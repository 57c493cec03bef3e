use std::path::PathBuf;

use palletmap_core::annotation::{ClassId, Detection};
use palletmap_core::association::{builtin_strategies, split_by_class, strategy_from_config, AssociationConfig, Link};
use palletmap_core::geometry::BoundingBox;
use serde::Serialize;

use crate::config::RunConfig;
use crate::errors::usage;
use crate::inputs::{load_predictions, print_json};
use crate::Outcome;

/// Association flags shared with `pipeline`.
#[derive(Debug, Clone, clap::Args)]
pub struct AssociationFlags {
    /// Registered strategy name (`centroid` or `iou`).
    #[arg(long, env = "PALLETMAP_METHOD")]
    pub method: Option<String>,

    /// Minimum IoU for the `iou` strategy.
    #[arg(long, env = "PALLETMAP_TAU")]
    pub tau: Option<f64>,

    /// Detections below this confidence are ignored.
    #[arg(long, env = "PALLETMAP_CONF")]
    pub conf: Option<f64>,
}

impl AssociationFlags {
    pub fn resolve(&self, cfg: &RunConfig) -> anyhow::Result<(AssociationConfig, f64)> {
        let mut assoc = cfg.association.clone();
        if let Some(m) = &self.method {
            assoc.method = m.clone();
        }
        if let Some(t) = self.tau {
            assoc.tau = t;
        }
        let conf = self.conf.unwrap_or(cfg.evaluation.conf_thresh);
        if !(0.0..=1.0).contains(&conf) {
            return Err(usage(format!("confidence threshold {conf} outside [0, 1]")));
        }
        // fail on bad names or tau before touching any input
        strategy_from_config(&builtin_strategies(), &assoc).map_err(|e| usage(e.to_string()))?;
        Ok((assoc, conf))
    }
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Prediction file (`.txt` YOLO lines with confidence, or `.grid` tensor).
    #[arg(long)]
    predictions: PathBuf,

    #[arg(long)]
    width: u32,

    #[arg(long)]
    height: u32,

    #[command(flatten)]
    association: AssociationFlags,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoxOut {
    pub index: usize,
    pub bbox: BoundingBox,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LinkStatus {
    Assigned,
    Unassigned,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinkOut {
    pub hole: usize,
    pub pallet: Option<usize>,
    pub score: f64,
    pub status: LinkStatus,
}

impl From<&Link> for LinkOut {
    fn from(l: &Link) -> Self {
        Self {
            hole: l.hole,
            pallet: l.pallet,
            score: l.score,
            status: if l.pallet.is_some() { LinkStatus::Assigned } else { LinkStatus::Unassigned },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ImageAssociation {
    pub method: String,
    pub holes: Vec<BoxOut>,
    pub pallets: Vec<BoxOut>,
    pub links: Vec<LinkOut>,
    pub assigned: usize,
    pub unassigned: usize,
}

pub fn associate_detections(
    detections: &[Detection],
    assoc: &AssociationConfig,
    conf: f64,
) -> anyhow::Result<ImageAssociation> {
    let kept: Vec<Detection> = detections.iter().filter(|d| d.confidence >= conf).copied().collect();
    let (holes, pallets) = split_by_class(&kept, ClassId::HOLE, ClassId::PALLET);
    let strategy = strategy_from_config(&builtin_strategies(), assoc).map_err(|e| usage(e.to_string()))?;
    let map = strategy.associate(&holes, &pallets);
    let boxes = |v: &[Detection]| -> Vec<BoxOut> {
        v.iter()
            .enumerate()
            .map(|(index, d)| BoxOut { index, bbox: d.bbox, confidence: d.confidence })
            .collect()
    };
    Ok(ImageAssociation {
        method: map.method.name().to_string(),
        holes: boxes(&holes),
        pallets: boxes(&pallets),
        assigned: map.assigned().count(),
        unassigned: map.unassigned_count(),
        links: map.links.iter().map(LinkOut::from).collect(),
    })
}

pub fn run(args: Args, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let (assoc, conf) = args.association.resolve(cfg)?;
    if args.width == 0 || args.height == 0 {
        return Err(usage("image width and height must be positive"));
    }
    let dets = load_predictions(&args.predictions, args.width as f64, args.height as f64, cfg)?;
    print_json(&associate_detections(&dets, &assoc, conf)?)?;
    Ok(Outcome::Clean)
}
