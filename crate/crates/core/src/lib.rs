//! Robust graph structure learning for node classification.
//!
//! The crate jointly learns a denoised adjacency matrix and the weights of a
//! two-layer GCN. The structure model is a Gaussian kernel over a learned
//! projection `M` and a sparse feature selector `a`; training alternates
//! gradient steps on the classifier with (proximal) gradient steps on the
//! structure, regularized by Laplacian smoothness and a spectral alignment
//! term between features and adjacency.
//!
//! Everything is dense `f64` (`ndarray`). Target graphs are a few thousand
//! nodes at most.

// `!(v >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod bounds;
pub mod config;
pub mod error;
pub mod gcn;
pub mod graph;
pub mod regularizers;
pub mod structure;
pub mod trainer;

pub use error::{Error, Result};
pub use graph::Graph;
