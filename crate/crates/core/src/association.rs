//! Linking detected pallet holes to their parent pallets.
//!
//! Two interchangeable strategies sit behind [`AssociationStrategy`]:
//!
//! * `centroid`: a hole belongs to a pallet whose box contains the hole's
//!   centroid (boundary inclusive). When several pallets qualify, the winner
//!   is the one with the largest IoU against the hole, then the smallest
//!   center distance, then the lowest index.
//! * `iou`: a hole belongs to the pallet with the highest IoU, provided that
//!   IoU is positive and at least `tau`. Exact ties go to the lowest index.
//!
//! A hole drawn inside its pallet has IoU `|H| / |P|`, which for four holes on
//! a pallet face lands around 0.05 to 0.10; the default `tau` of 0.05 sits at
//! the bottom of that band. Many holes may share one pallet.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{ClassId, Detection};
use crate::registry::{Registry, UnknownName};

pub const DEFAULT_TAU: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssociationError {
    #[error(transparent)]
    UnknownMethod(#[from] UnknownName),
    #[error("tau must lie in [0, 1], got {0}")]
    InvalidTau(f64),
    #[error("unknown tie-break policy `{0}`")]
    UnknownTieBreak(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Centroid,
    Iou,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Centroid => "centroid",
            Method::Iou => "iou",
        }
    }
}

/// Ordering applied when more than one pallet contains a hole's centroid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TieBreak {
    /// Largest IoU, then smallest center distance, then lowest index.
    #[default]
    #[serde(rename = "iou-distance-index")]
    IouDistanceIndex,
}

impl std::str::FromStr for TieBreak {
    type Err = AssociationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "iou-distance-index" => Ok(TieBreak::IouDistanceIndex),
            other => Err(AssociationError::UnknownTieBreak(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssociationConfig {
    pub method: String,
    pub tau: f64,
    pub tie_break: TieBreak,
}

impl Default for AssociationConfig {
    fn default() -> Self {
        Self {
            method: Method::Centroid.name().to_string(),
            tau: DEFAULT_TAU,
            tie_break: TieBreak::default(),
        }
    }
}

impl AssociationConfig {
    pub fn validate(&self) -> Result<(), AssociationError> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(AssociationError::InvalidTau(self.tau));
        }
        Ok(())
    }
}

/// One hole's outcome. `pallet` is `None` when the hole is unassigned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub hole: usize,
    pub pallet: Option<usize>,
    pub score: f64,
}

/// Hole index to pallet index, one entry per hole in hole order.
///
/// Indices refer to positions in the hole and pallet slices handed to the
/// strategy. Assigned links score 1 under `centroid` and the winning IoU
/// under `iou`; unassigned links score 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationMap {
    pub method: Method,
    pub links: Vec<Link>,
}

impl AssociationMap {
    pub fn assigned(&self) -> impl Iterator<Item = &Link> {
        self.links.iter().filter(|l| l.pallet.is_some())
    }

    pub fn unassigned_count(&self) -> usize {
        self.links.iter().filter(|l| l.pallet.is_none()).count()
    }

    pub fn pallet_of(&self, hole: usize) -> Option<usize> {
        self.links.get(hole).and_then(|l| l.pallet)
    }
}

pub trait AssociationStrategy: Send + Sync {
    fn method(&self) -> Method;

    fn associate(&self, holes: &[Detection], pallets: &[Detection]) -> AssociationMap;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CentroidStrategy {
    pub tie_break: TieBreak,
}

impl AssociationStrategy for CentroidStrategy {
    fn method(&self) -> Method {
        Method::Centroid
    }

    fn associate(&self, holes: &[Detection], pallets: &[Detection]) -> AssociationMap {
        let links = holes
            .iter()
            .enumerate()
            .map(|(hi, hole)| {
                let c = hole.bbox.centroid();
                let best = pallets
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| p.bbox.contains(&c))
                    .map(|(pi, p)| (pi, hole.bbox.iou(&p.bbox), hole.bbox.center_distance_sq(&p.bbox)))
                    .min_by(|a, b| match self.tie_break {
                        TieBreak::IouDistanceIndex => b
                            .1
                            .total_cmp(&a.1)
                            .then(a.2.total_cmp(&b.2))
                            .then(a.0.cmp(&b.0)),
                    });
                match best {
                    Some((pi, _, _)) => Link {
                        hole: hi,
                        pallet: Some(pi),
                        score: 1.0,
                    },
                    None => Link {
                        hole: hi,
                        pallet: None,
                        score: 0.0,
                    },
                }
            })
            .collect();
        AssociationMap {
            method: Method::Centroid,
            links,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IouStrategy {
    pub tau: f64,
}

impl Default for IouStrategy {
    fn default() -> Self {
        Self { tau: DEFAULT_TAU }
    }
}

impl AssociationStrategy for IouStrategy {
    fn method(&self) -> Method {
        Method::Iou
    }

    fn associate(&self, holes: &[Detection], pallets: &[Detection]) -> AssociationMap {
        let links = holes
            .iter()
            .enumerate()
            .map(|(hi, hole)| {
                let mut best: Option<(usize, f64)> = None;
                for (pi, p) in pallets.iter().enumerate() {
                    let v = hole.bbox.iou(&p.bbox);
                    // strict comparison keeps the lowest index on exact ties
                    if best.map_or(true, |(_, b)| v.total_cmp(&b) == Ordering::Greater) {
                        best = Some((pi, v));
                    }
                }
                match best {
                    Some((pi, v)) if v > 0.0 && v >= self.tau => Link {
                        hole: hi,
                        pallet: Some(pi),
                        score: v,
                    },
                    _ => Link {
                        hole: hi,
                        pallet: None,
                        score: 0.0,
                    },
                }
            })
            .collect();
        AssociationMap {
            method: Method::Iou,
            links,
        }
    }
}

pub type StrategyFactory =
    dyn Fn(&AssociationConfig) -> Box<dyn AssociationStrategy> + Send + Sync;

/// Registry with the built-in `centroid` and `iou` strategies.
pub fn builtin_strategies() -> Registry<StrategyFactory> {
    let mut reg: Registry<StrategyFactory> = Registry::new("association method");
    reg.register(
        Method::Centroid.name(),
        Box::new(|cfg| Box::new(CentroidStrategy { tie_break: cfg.tie_break })),
    )
    .register(
        Method::Iou.name(),
        Box::new(|cfg| Box::new(IouStrategy { tau: cfg.tau })),
    );
    reg
}

/// Resolves `cfg.method` in `registry` and builds the strategy.
pub fn strategy_from_config(
    registry: &Registry<StrategyFactory>,
    cfg: &AssociationConfig,
) -> Result<Box<dyn AssociationStrategy>, AssociationError> {
    cfg.validate()?;
    let factory = registry.get(&cfg.method)?;
    Ok(factory(cfg))
}

pub fn associate_centroid(holes: &[Detection], pallets: &[Detection]) -> AssociationMap {
    CentroidStrategy::default().associate(holes, pallets)
}

pub fn associate_iou(holes: &[Detection], pallets: &[Detection], tau: f64) -> AssociationMap {
    IouStrategy { tau }.associate(holes, pallets)
}

/// Dispatches to the configured built-in strategy.
pub fn associate(
    holes: &[Detection],
    pallets: &[Detection],
    cfg: &AssociationConfig,
) -> Result<AssociationMap, AssociationError> {
    let strategy = strategy_from_config(&builtin_strategies(), cfg)?;
    Ok(strategy.associate(holes, pallets))
}

/// Splits mixed detections into `(holes, pallets)`; other classes are dropped.
pub fn split_by_class(
    detections: &[Detection],
    hole_class: ClassId,
    pallet_class: ClassId,
) -> (Vec<Detection>, Vec<Detection>) {
    let holes = detections.iter().filter(|d| d.class_id == hole_class).copied().collect();
    let pallets = detections.iter().filter(|d| d.class_id == pallet_class).copied().collect();
    (holes, pallets)
}
