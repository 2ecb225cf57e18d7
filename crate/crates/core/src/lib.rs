//! Spatial partition trees and the diagnostics needed to study how fast they
//! shrink cells on data of low intrinsic dimension.
//!
//! The crate provides five splitting rules (dyadic, k-d, random projection,
//! principal direction and 2-means) on top of one generic builder, exact
//! data-diameter statistics for cells and partitions, a local covariance
//! dimension estimator, synthetic generators with known intrinsic dimension,
//! and an experiment harness for vector quantization, nearest-neighbor search
//! and regression under k-fold cross validation.
//!
//! ```
//! use spatree::synth;
//! use spatree::trees::{BuildConfig, PartitionTree, SplitRule};
//! use spatree::harness;
//!
//! let data = synth::sinusoid_manifold(512, 10, 7).unwrap();
//! let config = BuildConfig::new(SplitRule::Pd).with_min_size(8).with_seed(1);
//! let tree = PartitionTree::build(&data, &config).unwrap();
//! let profile = harness::level_profile(&tree);
//! assert!(profile.levels[1].avg_diam_sq <= profile.levels[0].avg_diam_sq);
//! ```
//!
//! Runnable walkthroughs of each capability live in `examples/`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod covdim;
pub mod dataset;
pub mod diameters;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod synth;
pub mod trees;

pub use dataset::PointSet;
pub use error::{Error, Result};
