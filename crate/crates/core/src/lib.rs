//! Thresholded correlation Gaussian process (TCGP) engine.
//!
//! Estimates sparse, spatially varying correlation maps between two
//! co-registered image modalities observed on the same subjects. The crate is
//! `no_std` (it needs `alloc`); enable the `parallel` feature to run the
//! per-voxel and per-subject updates on a rayon pool.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod analysis;
pub mod data;
pub mod error;
pub mod gibbs;
pub mod grid;
pub mod kernel;
pub mod kl;
pub mod minibatch;
pub mod model;
pub mod params;
pub mod piecewise;
pub mod rng;
pub mod simgen;
pub mod special;
pub mod state;

mod linalg;
mod par;

pub use data::{normalize_dataset, transform_data, ImageDataset, TransformedDataset};
pub use error::{Error, Result};
pub use gibbs::{run_gibbs, PosteriorSamples, Sampler};
pub use grid::GridDomain;
pub use kl::KLBasis;
pub use minibatch::{run_hybrid, HybridDiagnostics};
pub use params::{GibbsConfig, HybridConfig, HyperParams, InitStrategy};
pub use state::ChainState;
