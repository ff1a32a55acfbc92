//! Core algorithms for cross-view video geo-localization.
//!
//! The crate covers the full pipeline below the neural encoders, which are
//! externalized behind embedding files:
//!
//! - [`geodesy`]: GPS arithmetic, great-circle distance, Web-Mercator
//!   projection, and the mu-range video selection rule.
//! - [`dataset`]: clip segmentation and aerial gallery geometry (large
//!   regions, the 7x7 uncentered tile grid, centered crops).
//! - [`gallery`]: immutable galleries of L2-normalized embeddings with
//!   deterministic exact top-k cosine search.
//! - [`loss`]: the image-video contrastive loss with analytic gradients.
//! - [`trainer`]: toy linear encoders trained with that loss.
//! - [`metrics`]: recall@k, recall@1%, and top-1@distance evaluation.
//! - [`hierarchical`]: the four-step screening / gallery-reduction pipeline.
//! - [`synth`]: seeded synthetic trajectories and paired embeddings for
//!   desk-scale verification.
//!
//! The crate is `no_std`-compatible (`alloc` required); disable the default
//! `std` feature and enable `libm` for float math on bare targets.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_op_in_unsafe_fn)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("crossview-core requires either the `std` or the `libm` feature");

pub mod dataset;
mod error;
pub mod gallery;
pub mod geodesy;
pub mod hierarchical;
pub mod loss;
pub(crate) mod math;
pub mod matrix;
pub mod metrics;
pub mod rng;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
