use serde::{Deserialize, Serialize};

use super::AnnotationError;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];
}

/// Train/val/test shares. Defaults to 75/10/15.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.75,
            val: 0.10,
            test: 0.15,
        }
    }
}

impl SplitFractions {
    /// The 75/15/10 variant used for the model-comparison runs.
    pub const MODEL_TRAINING: SplitFractions = SplitFractions {
        train: 0.75,
        val: 0.15,
        test: 0.10,
    };

    pub fn new(train: f64, val: f64, test: f64) -> Result<Self, AnnotationError> {
        let f = Self { train, val, test };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), AnnotationError> {
        let parts = self.as_array();
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(AnnotationError::Config(format!(
                "split fractions must be non-negative, got {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(AnnotationError::Config(format!(
                "split fractions must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.train, self.val, self.test]
    }

    pub fn get(&self, split: Split) -> f64 {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
        }
    }
}

/// Item counts per split by largest remainder.
///
/// Each count is the floor of its exact share, and leftover items go to the
/// largest fractional parts (earlier split first on ties), so every count is
/// within one item of its exact share.
pub fn split_counts(n: usize, fractions: &SplitFractions) -> [usize; 3] {
    let exact = fractions.as_array().map(|f| f * n as f64);
    let mut counts = exact.map(|e| e.floor() as usize);
    let assigned: usize = counts.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnsplitEntry {
    pub id: String,
    pub width: u32,
    pub height: u32,
    /// Label file path, relative to the manifest's directory.
    pub labels: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub labels: String,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub classes: Vec<String>,
    pub images: Vec<ImageEntry>,
}

impl DatasetManifest {
    pub fn from_json(text: &str) -> Result<Self, AnnotationError> {
        serde_json::from_str(text).map_err(|e| AnnotationError::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn images_in(&self, split: Split) -> impl Iterator<Item = &ImageEntry> {
        self.images.iter().filter(move |e| e.split == split)
    }

    pub fn split_sizes(&self) -> [usize; 3] {
        Split::ALL.map(|s| self.images_in(s).count())
    }

    /// Split sizes deviating from `fractions` by one item or more.
    pub fn split_mismatches(&self, fractions: &SplitFractions) -> Vec<(Split, usize, f64)> {
        let n = self.images.len() as f64;
        Split::ALL
            .iter()
            .zip(self.split_sizes())
            .filter_map(|(&s, count)| {
                let expected = fractions.get(s) * n;
                ((count as f64 - expected).abs() >= 1.0).then_some((s, count, expected))
            })
            .collect()
    }
}

/// Shuffles `entries` with `seed` and partitions them by cumulative fractions.
///
/// The manifest lists images in input order; only the split tags depend on
/// the shuffle.
pub fn split_manifest(
    entries: Vec<UnsplitEntry>,
    classes: Vec<String>,
    fractions: &SplitFractions,
    seed: u64,
) -> Result<DatasetManifest, AnnotationError> {
    fractions.validate()?;
    let mut order: Vec<usize> = (0..entries.len()).collect();
    SplitMix64::new(seed).shuffle(&mut order);
    let [n_train, n_val, _] = split_counts(entries.len(), fractions);
    let mut tags = vec![Split::Test; entries.len()];
    for (rank, &idx) in order.iter().enumerate() {
        tags[idx] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }
    let images = entries
        .into_iter()
        .zip(tags)
        .map(|(e, split)| ImageEntry {
            id: e.id,
            width: e.width,
            height: e.height,
            labels: e.labels,
            split,
        })
        .collect();
    Ok(DatasetManifest { classes, images })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn entries(n: usize) -> Vec<UnsplitEntry> {
        (0..n)
            .map(|i| UnsplitEntry {
                id: format!("img_{i:04}"),
                width: 640,
                height: 480,
                labels: format!("labels/img_{i:04}.txt"),
            })
            .collect()
    }

    fn classes() -> Vec<String> {
        vec!["pallet".into(), "pallet-hole".into()]
    }

    #[test]
    fn dataset_sized_split() {
        let m = split_manifest(entries(1694), classes(), &SplitFractions::default(), 3).unwrap();
        assert_eq!(m.split_sizes(), [1271, 169, 254]);
        assert!(m.split_mismatches(&SplitFractions::default()).is_empty());
    }

    #[test]
    fn model_training_variant() {
        assert_eq!(split_counts(1694, &SplitFractions::MODEL_TRAINING), [1271, 254, 169]);
    }

    #[test]
    fn all_train() {
        let f = SplitFractions::new(1.0, 0.0, 0.0).unwrap();
        let m = split_manifest(entries(10), classes(), &f, 0).unwrap();
        assert!(m.images.iter().all(|e| e.split == Split::Train));
    }

    #[test]
    fn seed_determinism() {
        let a = split_manifest(entries(50), classes(), &SplitFractions::default(), 11).unwrap();
        let b = split_manifest(entries(50), classes(), &SplitFractions::default(), 11).unwrap();
        let c = split_manifest(entries(50), classes(), &SplitFractions::default(), 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_fractions() {
        assert!(matches!(
            SplitFractions::new(0.7, 0.1, 0.1),
            Err(AnnotationError::Config(_))
        ));
        assert!(SplitFractions::new(1.1, -0.1, 0.0).is_err());
        let bad = SplitFractions { train: 0.5, val: 0.5, test: 0.5 };
        assert!(split_manifest(entries(3), classes(), &bad, 0).is_err());
    }

    #[test]
    fn json_shape() {
        let m = split_manifest(entries(2), classes(), &SplitFractions::new(0.5, 0.5, 0.0).unwrap(), 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(v["classes"][1], "pallet-hole");
        let img = &v["images"][0];
        for key in ["id", "width", "height", "labels", "split"] {
            assert!(img.get(key).is_some(), "missing {key}");
        }
        assert_eq!(DatasetManifest::from_json(&m.to_json()).unwrap(), m);
    }

    proptest! {
        #[test]
        fn counts_within_one_item(n in 0usize..5000, a in 0.0..1.0f64, b in 0.0..1.0f64) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let f = SplitFractions { train: lo, val: hi - lo, test: 1.0 - hi };
            let counts = split_counts(n, &f);
            prop_assert_eq!(counts.iter().sum::<usize>(), n);
            for (c, share) in counts.iter().zip(f.as_array()) {
                prop_assert!((*c as f64 - share * n as f64).abs() < 1.0);
            }
        }
    }
}
