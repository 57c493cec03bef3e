//! Annotation-aware image augmentation.
//!
//! Four operations mirror the dataset preparation: flips, crop/zoom up to a
//! 1.19 scale factor, Gaussian blur up to sigma 1.1 px, and salt-and-pepper
//! noise on up to 0.49% of pixels. A [`Pipeline`] chains them by name. Each
//! image draws from its own RNG stream keyed by `(seed, image id)`, so the
//! output for an image never depends on which other images were processed
//! or in what order.

mod ops;
mod raster;

pub use ops::{
    crop_zoom, flip, gaussian_blur, gaussian_kernel, inject_noise, noise_pixel_count, visible_fraction, Axis,
    MIN_VISIBLE_FRACTION,
};
pub use raster::Raster;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{AnnotationError, NormalizedAnnotation};
use crate::registry::{Registry, UnknownName};
use crate::rng::SplitMix64;

pub const MAX_ZOOM: f64 = 1.19;
pub const MAX_BLUR_SIGMA: f64 = 1.1;
pub const MAX_NOISE_FRACTION: f64 = 0.0049;

#[derive(Debug, Error)]
pub enum AugmentationError {
    #[error("raster: {0}")]
    Raster(String),
    #[error("pnm: {0}")]
    Pnm(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("augmentation spec: {0}")]
    Spec(String),
    #[error(transparent)]
    UnknownOp(#[from] UnknownName),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationSpec {
    pub hflip: bool,
    pub vflip: bool,
    pub zoom_max: f64,
    pub blur_sigma_max: f64,
    pub noise_fraction_max: f64,
    pub seed: u64,
    /// Lifts the 1.19 / 1.1 / 0.0049 ceilings.
    pub allow_out_of_bounds: bool,
    /// Operation names, applied in order.
    pub ops: Vec<String>,
}

impl Default for AugmentationSpec {
    fn default() -> Self {
        Self {
            hflip: true,
            vflip: true,
            zoom_max: MAX_ZOOM,
            blur_sigma_max: MAX_BLUR_SIGMA,
            noise_fraction_max: MAX_NOISE_FRACTION,
            seed: 0,
            allow_out_of_bounds: false,
            ops: ["hflip", "vflip", "crop_zoom", "blur", "noise"].map(String::from).to_vec(),
        }
    }
}

impl AugmentationSpec {
    pub fn validate(&self) -> Result<(), AugmentationError> {
        let bad = |m: String| Err(AugmentationError::Spec(m));
        if !(self.zoom_max.is_finite() && self.zoom_max >= 1.0) {
            return bad(format!("zoom_max {} must be >= 1", self.zoom_max));
        }
        if !(self.blur_sigma_max.is_finite() && self.blur_sigma_max >= 0.0) {
            return bad(format!("blur_sigma_max {} must be >= 0", self.blur_sigma_max));
        }
        if !(0.0..=1.0).contains(&self.noise_fraction_max) {
            return bad(format!("noise_fraction_max {} outside [0, 1]", self.noise_fraction_max));
        }
        if !self.allow_out_of_bounds {
            for (name, v, max) in [
                ("zoom_max", self.zoom_max, MAX_ZOOM),
                ("blur_sigma_max", self.blur_sigma_max, MAX_BLUR_SIGMA),
                ("noise_fraction_max", self.noise_fraction_max, MAX_NOISE_FRACTION),
            ] {
                if v > max {
                    return bad(format!("{name} {v} exceeds {max}; set allow_out_of_bounds to override"));
                }
            }
        }
        Ok(())
    }
}

/// An image with its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub raster: Raster,
    pub annotations: Vec<NormalizedAnnotation>,
}

pub trait Augmentation: Send + Sync {
    fn name(&self) -> &'static str;
    fn apply(&self, sample: Sample, rng: &mut SplitMix64) -> Result<Sample, AugmentationError>;
}

/// Flips with probability 1/2 when enabled. The coin is always drawn.
pub struct RandomFlip {
    pub axis: Axis,
    pub enabled: bool,
}

impl Augmentation for RandomFlip {
    fn name(&self) -> &'static str {
        match self.axis {
            Axis::Horizontal => "hflip",
            Axis::Vertical => "vflip",
        }
    }

    fn apply(&self, sample: Sample, rng: &mut SplitMix64) -> Result<Sample, AugmentationError> {
        if rng.coin() && self.enabled {
            let (raster, annotations) = flip(&sample.raster, &sample.annotations, self.axis);
            return Ok(Sample { raster, annotations });
        }
        Ok(sample)
    }
}

/// Zoom uniform in `[1, zoom_max]`, anchor uniform over the unit square.
pub struct RandomCropZoom {
    pub zoom_max: f64,
}

impl Augmentation for RandomCropZoom {
    fn name(&self) -> &'static str {
        "crop_zoom"
    }

    fn apply(&self, sample: Sample, rng: &mut SplitMix64) -> Result<Sample, AugmentationError> {
        let zoom = rng.uniform(1.0, self.zoom_max);
        let anchor = (rng.next_f64(), rng.next_f64());
        let (raster, annotations) = crop_zoom(&sample.raster, &sample.annotations, zoom, anchor)?;
        Ok(Sample { raster, annotations })
    }
}

/// Sigma uniform in `(0, sigma_max]`; a zero maximum disables the blur.
pub struct RandomBlur {
    pub sigma_max: f64,
}

impl Augmentation for RandomBlur {
    fn name(&self) -> &'static str {
        "blur"
    }

    fn apply(&self, sample: Sample, rng: &mut SplitMix64) -> Result<Sample, AugmentationError> {
        let sigma = self.sigma_max * (1.0 - rng.next_f64());
        if sigma <= 0.0 {
            return Ok(sample);
        }
        Ok(Sample { raster: gaussian_blur(&sample.raster, sigma)?, ..sample })
    }
}

/// Noise fraction uniform in `[0, fraction_max]`.
pub struct RandomNoise {
    pub fraction_max: f64,
}

impl Augmentation for RandomNoise {
    fn name(&self) -> &'static str {
        "noise"
    }

    fn apply(&self, sample: Sample, rng: &mut SplitMix64) -> Result<Sample, AugmentationError> {
        let fraction = rng.uniform(0.0, self.fraction_max);
        Ok(Sample { raster: inject_noise(&sample.raster, fraction, rng)?, ..sample })
    }
}

pub type AugmentationFactory = dyn Fn(&AugmentationSpec) -> Box<dyn Augmentation> + Send + Sync;

pub fn builtin_augmentations() -> Registry<AugmentationFactory> {
    let mut reg: Registry<AugmentationFactory> = Registry::new("augmentation");
    reg.register(
        "hflip",
        Box::new(|s: &AugmentationSpec| Box::new(RandomFlip { axis: Axis::Horizontal, enabled: s.hflip }) as Box<dyn Augmentation>),
    )
    .register(
        "vflip",
        Box::new(|s: &AugmentationSpec| Box::new(RandomFlip { axis: Axis::Vertical, enabled: s.vflip }) as Box<dyn Augmentation>),
    )
    .register(
        "crop_zoom",
        Box::new(|s: &AugmentationSpec| Box::new(RandomCropZoom { zoom_max: s.zoom_max }) as Box<dyn Augmentation>),
    )
    .register(
        "blur",
        Box::new(|s: &AugmentationSpec| Box::new(RandomBlur { sigma_max: s.blur_sigma_max }) as Box<dyn Augmentation>),
    )
    .register(
        "noise",
        Box::new(|s: &AugmentationSpec| Box::new(RandomNoise { fraction_max: s.noise_fraction_max }) as Box<dyn Augmentation>),
    );
    reg
}

pub struct Pipeline {
    seed: u64,
    steps: Vec<Box<dyn Augmentation>>,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("seed", &self.seed)
            .field("steps", &self.step_names())
            .finish()
    }
}

impl Pipeline {
    pub fn from_spec(spec: &AugmentationSpec) -> Result<Self, AugmentationError> {
        spec.validate()?;
        let reg = builtin_augmentations();
        let steps = spec
            .ops
            .iter()
            .map(|name| reg.get(name).map(|make| make(spec)))
            .collect::<Result<_, _>>()?;
        Ok(Self { seed: spec.seed, steps })
    }

    pub fn step_names(&self) -> Vec<&'static str> {
        self.steps.iter().map(|s| s.name()).collect()
    }

    pub fn apply(&self, image_id: &str, sample: Sample) -> Result<Sample, AugmentationError> {
        let mut rng = SplitMix64::for_key(self.seed, image_id);
        self.steps.iter().try_fold(sample, |s, step| step.apply(s, &mut rng))
    }
}
