//! Path-based explanations for knowledge graph embedding link predictions.
//!
//! The crate covers the full pipeline:
//!
//! - [`kg`]: triple ingestion, seeded splits, component filtering, entity
//!   typing and sibling augmentation.
//! - [`kge`]: a ComplEx embedding store with scoring, top-k queries, a small
//!   SGD trainer, filtered MRR and a binary persistence format.
//! - [`explain`]: the perturbation + non-negative Lasso surrogate explainer.
//! - [`baseline`]: ranking candidate paths directly by their path score.
//! - [`benchmark`]: the parent-query benchmark of commonsense explanatory paths.
//! - [`eval`]: NDCG, truth-category sampling and the experiment sweeps.
//! - [`synthetic`]: a seeded family-tree corpus for desk-scale experiments.
//! - [`cli`]: the `linklogic` command line.

pub mod baseline;
pub mod benchmark;
pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod explain;
pub mod kg;
pub mod kge;
pub mod seed;
pub mod synthetic;

pub use error::{Error, Result};
