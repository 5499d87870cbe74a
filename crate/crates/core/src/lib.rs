//! Robust two-view geometry estimation with Monte Carlo diffusion data
//! synthesis.
//!
//! The crate contains the full numeric pipeline:
//!
//! - [`geometry`]: epipolar primitives (essential matrix, eight-point
//!   solver, decomposition) and pose-error metrics with AUC aggregation.
//! - [`synth`]: deterministic synthetic two-view scenes with exact
//!   ground-truth correspondences, plus parametric "matcher style"
//!   corruptions.
//! - [`mcd`]: Monte Carlo diffusion of ground-truth matches into noisy
//!   training sets with multi-stage randomization.
//! - [`estimator`]: uniform and guided RANSAC for essential-matrix
//!   estimation with adaptive termination.
//! - [`sampler`]: a small feed-forward scorer over correspondences,
//!   trained by score-function (REINFORCE) policy gradients.
//! - [`rng`]: the portable counter-based generator every randomized
//!   operation draws from.
//!
//! The crate is `no_std` (with `alloc`): float math resolves to software
//! implementations rather than a host libm, so results are bit-identical
//! across platforms. File formats, CLI, and parallel drivers live in the
//! companion `mcd-cli` crate.

#![no_std]

extern crate alloc;

pub use nalgebra;

#[cfg(test)]
extern crate std;

pub mod estimator;
pub mod geometry;
pub mod matchset;
pub mod mcd;
pub mod rng;
pub mod sampler;
pub mod synth;

pub use estimator::{EstimationResult, EstimatorError, RansacConfig};
pub use geometry::{Camera, EssentialHypothesis, GeometryError, RelativePose};
pub use matchset::{Correspondence, MatchSet};
pub use mcd::{DiffusedSet, DiffusionSchedule, MatchOrigin, McdConfig, McdError};
pub use rng::DetRng;
pub use sampler::{SamplerError, SamplerModel, TrainConfig};
pub use synth::{MatcherStyle, SceneConfig, ScenePair, SynthError};
