//! Pallet-perception post-processing: box geometry, YOLO annotation I/O,
//! hole-to-pallet association, detection losses, evaluation metrics,
//! label-aware augmentation and TPE hyperparameter search.

pub mod annotation;
pub mod association;
pub mod augmentation;
pub mod evaluation;
pub mod geometry;
pub mod losses;
pub mod registry;
pub mod rng;
pub mod synthetic;
pub mod tuner;
