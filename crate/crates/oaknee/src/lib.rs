//! Radiographic knee osteoarthritis detection from landmark geometry and
//! bone texture.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`geometry`]: landmark containers, plateau alignment, the JS² pairwise
//!   distance descriptor and joint-space-width measurements.
//! - [`imaging`]: intensity normalization, resampling, rotation and medial
//!   tibia ROI extraction.
//! - [`texture`]: classical texture baselines (rotation-invariant uniform
//!   LBP, differential box-counting fractal dimension).
//! - [`tensornet`]: dense tensor kernels with exact backward passes and a
//!   finite-difference gradient checker.
//! - [`models`]: the four classifier families and the training loop.
//! - [`evaluation`]: ROC/AUC, forest feature importance, descriptor noise
//!   sweeps and per-class density statistics.
//! - [`dataio`]: file formats (.pts, PGM, manifest CSV, checkpoints) and the
//!   calibrated synthetic data generator.
//! - [`cli`]: the `oaknee` command line tool.

pub mod cli;
pub mod dataio;
pub mod evaluation;
pub mod geometry;
pub mod imaging;
pub mod models;
pub mod tensornet;
pub mod texture;

/// Training-precision tensor.
pub type Tensor32 = tensornet::Tensor<f32>;
/// Gradient-check-precision tensor.
pub type Tensor64 = tensornet::Tensor<f64>;
