//! Seeded warehouse scenes for tests, fixtures and the tuning demo.
//!
//! Pallets stand side by side in the lower part of the frame, each with two
//! fork holes inside its footprint. Optional stray holes sit in a band near
//! the top edge, outside every pallet, so they can never be associated.

use serde::{Deserialize, Serialize};

use crate::annotation::{
    format_label_line, format_labels, split_manifest, AnnotationError, SplitFractions, UnsplitEntry,
    DEFAULT_CLASS_NAMES, ClassId, Detection, GroundTruth, NormalizedAnnotation,
};
use crate::evaluation::EvalImage;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub width: u32,
    pub height: u32,
    pub min_pallets: usize,
    pub max_pallets: usize,
    /// Holes placed outside every pallet.
    pub stray_holes: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
            min_pallets: 1,
            max_pallets: 3,
            stray_holes: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub pallets: Vec<NormalizedAnnotation>,
    pub holes: Vec<NormalizedAnnotation>,
    /// Index into `pallets` for each hole; `None` for stray holes.
    pub parent: Vec<Option<usize>>,
}

impl Scene {
    /// Pallets first, then holes, as label lines would list them.
    pub fn annotations(&self) -> Vec<NormalizedAnnotation> {
        self.pallets.iter().chain(&self.holes).copied().collect()
    }

    pub fn label_text(&self) -> String {
        format_labels(&self.annotations())
    }

    pub fn ground_truths(&self) -> Result<Vec<GroundTruth>, AnnotationError> {
        let (w, h) = (self.width as f64, self.height as f64);
        self.annotations()
            .iter()
            .map(|a| Ok(GroundTruth::new(a.class_id, a.to_pixel_box(w, h)?)))
            .collect()
    }

    pub fn stray_count(&self) -> usize {
        self.parent.iter().filter(|p| p.is_none()).count()
    }
}

pub fn generate_scene(id: &str, cfg: &SceneConfig, seed: u64) -> Result<Scene, AnnotationError> {
    if cfg.min_pallets == 0 || cfg.min_pallets > cfg.max_pallets {
        return Err(AnnotationError::Config(format!(
            "pallet range {}..={} is empty or starts at zero",
            cfg.min_pallets, cfg.max_pallets
        )));
    }
    let mut rng = SplitMix64::for_key(seed, id);
    let n = cfg.min_pallets + rng.below((cfg.max_pallets - cfg.min_pallets + 1) as u64) as usize;
    let slot = 1.0 / n as f64;
    let mut pallets = Vec::with_capacity(n);
    let mut holes = Vec::new();
    let mut parent = Vec::new();
    for i in 0..n {
        let pw = slot * rng.uniform(0.55, 0.85);
        let ph = rng.uniform(0.2, 0.4);
        let x1 = i as f64 * slot + rng.uniform(0.05 * slot, slot - pw - 0.05 * slot);
        let y1 = rng.uniform(0.25, 0.95 - ph);
        pallets.push(NormalizedAnnotation::new(ClassId::PALLET, x1 + pw / 2.0, y1 + ph / 2.0, pw, ph)?);
        // two fork openings in the lower half of the face
        let hw = pw * rng.uniform(0.22, 0.28);
        let hh = ph * rng.uniform(0.30, 0.38);
        let hy = y1 + ph * 0.55 + hh / 2.0;
        for fx in [0.27, 0.73] {
            let hx = x1 + pw * fx;
            holes.push(NormalizedAnnotation::new(ClassId::HOLE, hx, hy, hw, hh)?);
            parent.push(Some(i));
        }
    }
    for k in 0..cfg.stray_holes {
        let band = 1.0 / cfg.stray_holes as f64;
        let hw = band * rng.uniform(0.2, 0.5);
        let hx = k as f64 * band + band / 2.0;
        holes.push(NormalizedAnnotation::new(ClassId::HOLE, hx, rng.uniform(0.06, 0.14), hw, 0.06)?);
        parent.push(None);
    }
    Ok(Scene { id: id.to_string(), width: cfg.width, height: cfg.height, pallets, holes, parent })
}

/// A batch of scenes with ids `{prefix}{index:03}`.
pub fn generate_scenes(prefix: &str, count: usize, cfg: &SceneConfig, seed: u64) -> Result<Vec<Scene>, AnnotationError> {
    (0..count).map(|i| generate_scene(&format!("{prefix}{i:03}"), cfg, seed)).collect()
}

/// Exact boxes with confidences in `[0.6, 0.99)`.
pub fn perfect_predictions(scene: &Scene, seed: u64) -> Vec<(NormalizedAnnotation, f64)> {
    let mut rng = SplitMix64::for_key(seed, &format!("{}/pred", scene.id));
    scene
        .annotations()
        .into_iter()
        .map(|a| (a, (rng.uniform(0.6, 0.99) * 100.0).round() / 100.0))
        .collect()
}

/// Boxes displaced by `jitter` (relative to their size) plus one low-confidence
/// false positive per pallet. Better-placed boxes get higher confidence.
pub fn noisy_predictions(scene: &Scene, jitter: f64, seed: u64) -> Vec<(NormalizedAnnotation, f64)> {
    let mut rng = SplitMix64::for_key(seed, &format!("{}/noisy", scene.id));
    let mut out = Vec::new();
    for a in scene.annotations() {
        let dx = jitter * rng.standard_normal();
        let dy = jitter * rng.standard_normal();
        let sw = 1.0 + jitter * rng.standard_normal();
        let sh = 1.0 + jitter * rng.standard_normal();
        let moved = jittered(&a, a.cx() + dx * a.w(), a.cy() + dy * a.h(), a.w() * sw, a.h() * sh);
        let err = (dx * dx + dy * dy).sqrt() + (sw - 1.0).abs() + (sh - 1.0).abs();
        let conf = (0.95 - err).clamp(0.3, 0.95) * rng.uniform(0.9, 1.0);
        out.push((moved, conf));
    }
    for p in &scene.pallets {
        let ghost = jittered(p, p.cx(), (p.cy() - p.h()).max(0.1), p.w() * 0.8, p.h() * 0.6);
        out.push((ghost, rng.uniform(0.05, 0.3)));
    }
    out
}

fn jittered(a: &NormalizedAnnotation, cx: f64, cy: f64, w: f64, h: f64) -> NormalizedAnnotation {
    let x1 = (cx - w / 2.0).clamp(0.0, 0.999);
    let x2 = (cx + w / 2.0).clamp(x1 + 1e-3, 1.0);
    let y1 = (cy - h / 2.0).clamp(0.0, 0.999);
    let y2 = (cy + h / 2.0).clamp(y1 + 1e-3, 1.0);
    a.with_geometry((x1 + x2) / 2.0, (y1 + y2) / 2.0, x2 - x1, y2 - y1)
        .expect("clamped box lies in the unit square")
}

/// Prediction file text written straight from the normalized boxes.
pub fn prediction_text(preds: &[(NormalizedAnnotation, f64)]) -> String {
    preds
        .iter()
        .map(|(a, c)| format!("{} {c}\n", format_label_line(a)))
        .collect()
}

/// Pixel-space detections and ground truth for evaluation.
pub fn eval_image(scene: &Scene, preds: &[(NormalizedAnnotation, f64)]) -> Result<EvalImage, AnnotationError> {
    let (w, h) = (scene.width as f64, scene.height as f64);
    let detections = preds
        .iter()
        .map(|(a, c)| Detection::new(a.class_id, a.to_pixel_box(w, h)?, *c))
        .collect::<Result<_, _>>()?;
    Ok(EvalImage { detections, ground_truths: scene.ground_truths()? })
}

/// Seed of the bundled warehouse fixture.
pub const FIXTURE_SEED: u64 = 2024;
pub const FIXTURE_IMAGES: usize = 12;
/// Every this-many-th perturbed image gets one stray hole.
pub const FIXTURE_STRAY_EVERY: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixtureVariant {
    /// Every hole sits inside a pallet.
    Clean,
    /// As clean, plus stray holes that belong to no pallet.
    Perturbed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureFile {
    /// Relative to the variant directory.
    pub path: String,
    pub contents: String,
}

/// Scenes of the bundled fixture. Pallets and in-pallet holes are the same
/// in both variants.
pub fn fixture_scenes(variant: FixtureVariant) -> Result<Vec<Scene>, AnnotationError> {
    (0..FIXTURE_IMAGES)
        .map(|i| {
            let stray = match variant {
                FixtureVariant::Perturbed if i % FIXTURE_STRAY_EVERY == 0 => 1,
                _ => 0,
            };
            let cfg = SceneConfig { stray_holes: stray, ..Default::default() };
            generate_scene(&format!("wh{i:03}"), &cfg, FIXTURE_SEED)
        })
        .collect()
}

/// Manifest, label files, perfect prediction files and `expected.json`.
pub fn fixture_files(variant: FixtureVariant) -> Result<Vec<FixtureFile>, AnnotationError> {
    let scenes = fixture_scenes(variant)?;
    let entries = scenes
        .iter()
        .map(|s| UnsplitEntry {
            id: s.id.clone(),
            width: s.width,
            height: s.height,
            labels: format!("labels/{}.txt", s.id),
        })
        .collect();
    let classes = DEFAULT_CLASS_NAMES.map(String::from).to_vec();
    let manifest = split_manifest(entries, classes, &SplitFractions::default(), FIXTURE_SEED)?;
    let mut files = vec![FixtureFile { path: "manifest.json".into(), contents: manifest.to_json() }];
    for s in &scenes {
        files.push(FixtureFile { path: format!("labels/{}.txt", s.id), contents: s.label_text() });
        files.push(FixtureFile {
            path: format!("predictions/{}.txt", s.id),
            contents: prediction_text(&perfect_predictions(s, FIXTURE_SEED)),
        });
    }
    let holes: usize = scenes.iter().map(|s| s.holes.len()).sum();
    let unassigned: usize = scenes.iter().map(Scene::stray_count).sum();
    let expected = serde_json::json!({
        "variant": variant,
        "images": scenes.len(),
        "holes": holes,
        "unassigned_holes": unassigned,
        "map50": 1.0,
    });
    files.push(FixtureFile {
        path: "expected.json".into(),
        contents: serde_json::to_string_pretty(&expected).expect("json value serializes") + "\n",
    });
    Ok(files)
}
