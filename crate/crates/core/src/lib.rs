#![cfg_attr(not(test), no_std)]

//! Pure kernels for crowded-scene pedestrian detection pipelines.
//!
//! Everything in this crate is allocation-only (`alloc`) and free of IO, so it can
//! run inside a training data loader, an embedded evaluator, or the `crowdped`
//! command-line tool alike. Randomized operations take explicit seeds and are
//! deterministic.
//!
//! Module map:
//!
//! - [`geometry`]: boxes, IoU/IoA (scalar and batched), box-delta encoding.
//! - [`annotation`]: per-image instance model, occlusion ratio, evaluation subsets.
//! - [`anchors`]: one-scale-per-level anchor lattice over a feature pyramid.
//! - [`sampling`]: threshold matching, ground-truth jittering, positive-sample statistics.
//! - [`augmentation`]: five-part body decomposition and mean-value occlusion.
//! - [`mask`]: head-mask supervision targets and the detector loss terms.
//! - [`postprocess`]: greedy NMS and top-k truncation.
//! - [`evaluation`]: miss-rate vs. FPPI curve and the log-average miss rate.
//! - [`synthetic`]: seeded crowd-scene generator and mock detector.

extern crate alloc;

pub mod anchors;
pub mod annotation;
pub mod augmentation;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod mask;
pub mod postprocess;
pub mod sampling;
pub mod synthetic;

mod seed;

pub use error::{Error, Result};
pub use geometry::{BBox, BoxDeltas};
pub use seed::derive_seed;
