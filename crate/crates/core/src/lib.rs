//! Saliency-weighted linear discriminant analysis.
//!
//! Every class gets a graph over its own samples. A probabilistic saliency
//! estimate on that graph (the closed form `p = H⁻¹ 1`, normalized) weights
//! the samples, and the weights drive new class representations and new
//! within/between-class scatter matrices. Classical LDA and the Loog, Tang and
//! Jarchi weighted variants are implemented alongside, and the [`harness`]
//! runs stratified cross-validation comparisons of all of them.
//!
//! Conventions used throughout the crate:
//!
//! * feature matrices are `N × D` with one sample per row;
//! * per-class sample matrices ([`dataset::ClassPartition`]) are `D × N_c`
//!   with one sample per column;
//! * class ids are `0..C` internally, original label strings are kept on the
//!   [`dataset::Dataset`] for reporting.

pub mod classify;
pub mod dataset;
pub mod error;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod saliency;
pub mod scatter;
pub mod selftest;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};
