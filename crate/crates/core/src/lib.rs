//! Two-person audio-driven motion toolkit.
//!
//! The crate covers the whole pipeline for modelling two interacting people:
//!
//! * [`motion`]: skeletons, BVH ingest/emit, exponential-map rotations and the
//!   previous-frame delta encoding used as the body-motion representation.
//! * [`audio`]: WAV ingest and the 62-wide per-frame conditioning features
//!   (27 log-mel bands, 32 semantic dims, 3 action one-hot dims).
//! * [`dataset`]: pairing two persons into training windows, relative offsets,
//!   synthetic data and the on-disk dataset container.
//! * [`diffusion`]: the DDPM forward process, the `Y_0`-regression training
//!   objective, ancestral sampling and the body-motion generator.
//! * [`face`]: the two-person facial-vertex diffusion model with biased
//!   conditional attention.
//! * [`metrics`] and [`analysis`]: evaluation metrics and dataset statistics.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and runs sequentially otherwise.

pub mod analysis;
pub mod audio;
pub mod binfmt;
pub mod dataset;
pub mod diffusion;
pub mod error;
pub mod face;
pub mod metrics;
pub mod motion;
pub mod nn;
pub mod par;

pub use error::{Error, Result};
