//! Tooling for moving multi-label text-classification datasets between two
//! ecosystems: taxonomy-based corpora with small label sets, and flat
//! extreme-scale label spaces.
//!
//! The crate covers the full pipeline: dataset parsing and statistics,
//! TF-IDF features and label embeddings, synthetic label-tree construction
//! by recursive balanced k-means, tree segmentation under a node budget,
//! cross-ecosystem label-set conversion, a tree-based sparse linear
//! classifier for end-to-end validation, and ranking/classification metrics.

pub mod corpus;
pub mod error;
pub mod features;
pub mod hlt;
pub mod metrics;
pub mod plt;
pub mod rng;
pub mod sparse;
pub mod transfer;
pub mod tree;

pub use error::{Error, Result};
pub use sparse::SparseVector;
