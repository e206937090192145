//! Measure how much of an SGD-trained classifier's predictive performance is
//! explained by a simpler classifier, using plug-in conditional mutual
//! information over binary predictions.
//!
//! The crate is organised by stage:
//!
//! - [`infotheory`]: entropies and (conditional) mutual information over
//!   empirical binary tables, the performance correlation
//!   `mu = I(F;Y) - I(F;Y|L)`, and the matched-information null model.
//! - [`datagen`]: seeded synthetic tasks, the sparse-noise linear model,
//!   the binarised MNIST loader and the on-disk dataset container.
//! - [`models`]: linear and ReLU MLP classifiers trained by vanilla SGD
//!   with exact backpropagation, plus checkpoint serialization.
//! - [`probes`]: the checkpoint-tracking protocol (`T0`, null-model ratios,
//!   complexity ladder, good vs. bad initialization).
//! - [`theory`]: closed-form limit of gradient descent on the sparse-noise
//!   square-loss problem and its numerical verification.
//! - [`config`], [`plot`]: experiment configuration and SVG output used by
//!   the command line front-end.

pub mod config;
pub mod datagen;
mod error;
pub mod infotheory;
pub mod models;
pub mod plot;
pub mod probes;
mod rng;
pub mod theory;

pub use error::{Error, Result};
pub use rng::{derive_seed, seeded_rng};
