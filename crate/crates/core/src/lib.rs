//! Region tracking by level-set curve evolution.
//!
//! A user-seeded region in the first frame of an image sequence is followed
//! through later frames by evolving the zero level set of a scalar field
//! under gradient descent of a weighted sum of region energies: mean
//! intensity, area, histogram divergences over intensity, gradient
//! magnitude and RGB channels, plus a length regularizer.
//!
//! The crate is organised bottom-up:
//!
//! - [`image`]: rasters, masks and the gradient-magnitude feature.
//! - [`levelset`]: signed distance fields, upwind operators, curvature and
//!   the explicit evolution step.
//! - [`stats`]: floored histograms and Kullback-Leibler divergence.
//! - [`functionals`]: energy terms, their boundary speeds and the seven
//!   preset designs.
//! - [`tracker`]: the per-frame descent loop and sequence driver.
//! - [`synth`]: deterministic synthetic scenes with exact ground truth.
//! - [`metrics`]: desired/undesired region coverage.
//! - [`bench`]: the synthetic benchmark suite.

pub mod bench;
pub mod error;
pub mod functionals;
pub mod image;
pub mod levelset;
pub mod metrics;
pub mod stats;
pub mod synth;
pub mod tracker;

pub use error::{Error, Result};
pub use functionals::{Design, EnergyTerm, RefStats, TermState};
pub use image::{Image, RegionMask};
pub use levelset::{LevelSetGrid, SpeedField};
pub use metrics::{coverage, CoverageScore};
pub use stats::Histogram;
pub use tracker::{FrameReport, TrackConfig, TrackReport};
