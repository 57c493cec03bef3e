//! Run configuration: defaults, overlaid by an optional JSON file, overlaid
//! by environment variables and flags (clap resolves those two).

use std::path::Path;

use palletmap_core::annotation::{SplitFractions, DEFAULT_NUM_CLASSES};
use palletmap_core::association::AssociationConfig;
use palletmap_core::augmentation::AugmentationSpec;
use palletmap_core::evaluation::EvalConfig;
use palletmap_core::tuner::StudyConfig;
use serde::{Deserialize, Serialize};

use crate::errors::{read_text, usage};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub format: Format,
    pub num_classes: usize,
    /// Minimum confidence kept when decoding grid tensors.
    pub decode_conf: f64,
    pub association: AssociationConfig,
    pub evaluation: EvalConfig,
    pub augmentation: AugmentationSpec,
    pub study: StudyConfig,
    pub split: SplitFractions,
    pub losscheck_samples: usize,
    /// Set when `--seed` or `PALLETMAP_SEED` was given; beats seeds in spec files.
    #[serde(skip)]
    pub seed_override: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            format: Format::Json,
            num_classes: DEFAULT_NUM_CLASSES,
            decode_conf: 0.001,
            association: AssociationConfig::default(),
            evaluation: EvalConfig::default(),
            augmentation: AugmentationSpec::default(),
            study: StudyConfig::default(),
            split: SplitFractions::default(),
            losscheck_samples: 500,
            seed_override: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = read_text(path)?;
        serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
    }

    /// Applies the command-line seed to every seeded component.
    pub fn override_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.augmentation.seed = seed;
        self.study.seed = seed;
        self.seed_override = Some(seed);
    }
}
