//! Annotation and evaluation plumbing for binary hate-speech labelling.
//!
//! The crate covers the annotation track end to end:
//!
//! - [`filter`]: keep conversational web-index records by URL keyword and
//!   schema.org type, with seeded per-language sub-sampling.
//! - [`ingest`]: map human-labelled datasets onto the binary Hate/Neutral
//!   scheme and assemble training configurations.
//! - [`gateway`]: render the zero-shot prompt, query four completion
//!   endpoints for next-token log-probabilities and build probability vectors.
//! - [`ensemble`]: majority vote, mean averaging and a gradient-boosted-tree
//!   meta-learner over the eight-dimensional probability vectors.
//! - [`eval`]: accuracy, macro-F1, pooled group scores, mean-probability
//!   thresholding and baseline deltas.
//! - [`stats`]: per-model and per-strategy pool statistics by language.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and plain iterators otherwise. Every
//! reduction is ordered, so results are bit-identical either way.

pub mod ensemble;
pub mod error;
pub mod eval;
pub mod filter;
pub mod gateway;
pub mod ingest;
pub mod jsonl;
pub mod numeric;
pub mod par;
pub mod stats;
pub mod types;

pub use error::{Error, Result};
pub use types::{BinaryLabel, Language};
